//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 6 has an optional data-gated part: set `KINSHIP_THAI_FREQS` to
//! a Thai frequency CSV matching `configs/thai.toml` to run it
//! (`KINSHIP_PAPER_B` overrides the default B = 1,000,000).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kinship_core::ci::{clopper_pearson, wald_difference};
use kinship_core::freqs::{FrequencyTable, PoolWeights, Subpopulation};
use kinship_core::lrstats::{lr_all, Statistic};
use kinship_core::mcengine::{SampleMatrix, SimConfig, Simulator};
use kinship_core::pairprob::{classify_coded, pair_probability, pair_probability_coded, GenotypeCombination, ThetaIbd};
use kinship_core::powerest::{null_threshold, power, power_diff_ci, SortedSample};
use kinship_core::profile::{all_genotypes, Allele, Genotype, LocusGenotype, Profile};
use kinship_core::rng::{Phase, StreamFactory};
use kinship_core::synth::{synth_table, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table_from(
    panel: &[&str],
    labels: &[&[&str]],
    dists: Vec<Vec<Vec<f64>>>,
    props: &[f64],
) -> FrequencyTable {
    let alleles = labels
        .iter()
        .map(|ls| ls.iter().map(|a| Allele::new(*a).unwrap()).collect())
        .collect();
    let subpops = props
        .iter()
        .enumerate()
        .map(|(i, &p)| Subpopulation {
            name: format!("S{}", i + 1),
            proportion: p,
            sample_size: Some(200),
        })
        .collect();
    FrequencyTable::from_parts(panel.iter().map(|s| s.to_string()).collect(), subpops, alleles, dists, 1e-5).unwrap()
}

// ---------------------------------------------------------------------------
// 1. worked example
// ---------------------------------------------------------------------------

fn worked_example() -> Outcome {
    let table = table_from(&["D3S1358"], &[&["13", "14", "15"]], vec![vec![vec![0.15, 0.20, 0.65]]], &[1.0]);
    let g = LocusGenotype::from_labels("D3S1358", "13", "14").unwrap();
    let dist = table.allele_dist(0, 0);
    let pc = pair_probability(&g, &g, &ThetaIbd::PARENT_CHILD, &dist).unwrap();
    let un = pair_probability(&g, &g, &ThetaIbd::UNRELATED, &dist).unwrap();
    // hand arithmetic: (0.15)(0.20)(0.35) and 4 (0.15)^2 (0.20)^2
    check((pc - 0.0105).abs() < 1e-12, format!("parent-child {pc}"))?;
    check((un - 0.0036).abs() < 1e-12, format!("unrelated {un}"))?;
    let x = Profile::new(vec![g.clone()]).unwrap();
    let b = lr_all(&x, &x, &ThetaIbd::UNRELATED, &ThetaIbd::PARENT_CHILD, &table, PoolWeights::Census).unwrap();
    let lr = b.log_value(Statistic::Laf).exp();
    check((lr - 2.9167).abs() < 1e-4, format!("LR {lr}"))?;

    // same pair through the command-line front end
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("meta.toml");
    std::fs::write(&meta, table.meta().to_toml_string()).unwrap();
    let csv = dir.path().join("freqs.csv");
    table.write_csv(std::fs::File::create(&csv).unwrap()).unwrap();
    let prof = dir.path().join("x.csv");
    std::fs::write(&prof, "locus,allele1,allele2\nD3S1358,14,13\n").unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = kinship_cli::main_with_args(
        [
            "kinship", "lr", "--meta", p(&meta), "--freqs", p(&csv), "--test", "parent-child", p(&prof), p(&prof),
        ],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out);
    check(code == 0, format!("lr exited {code}: {}", String::from_utf8_lossy(&err)))?;
    check(text.contains("2.916667"), format!("lr output lacks 2.916667:\n{text}"))?;
    Ok(format!("P_PC={pc:.4} P_U={un:.4} LR={lr:.4}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// ---------------------------------------------------------------------------
// 2-3. pair probabilities
// ---------------------------------------------------------------------------

/// Unrelated, parent-child and full-sib cells typed in from the table of
/// seven genotype-pair patterns.
fn table_cells(g1: Genotype, g2: Genotype, p: &[f64]) -> [f64; 3] {
    let (g1, g2) = if g1.is_homozygous() || !g2.is_homozygous() { (g1, g2) } else { (g2, g1) };
    let f = |i: u16| p[i as usize];
    let has = |g: Genotype, x: u16| g.a == x || g.b == x;
    if g1.is_homozygous() && g2.is_homozygous() {
        let a = f(g1.a);
        if g1 == g2 {
            return [a.powi(4), a.powi(3), a * a * (1.0 + a).powi(2) / 4.0];
        }
        let b = f(g2.a);
        return [2.0 * a * a * b * b, 0.0, a * a * b * b / 2.0];
    }
    if g1.is_homozygous() {
        let a = f(g1.a);
        if has(g2, g1.a) {
            let b = f(if g2.a == g1.a { g2.b } else { g2.a });
            return [4.0 * a.powi(3) * b, 2.0 * a * a * b, a * a * b * (1.0 + a)];
        }
        let (b, c) = (f(g2.a), f(g2.b));
        return [4.0 * a * a * b * c, 0.0, a * a * b * c];
    }
    if g1 == g2 {
        let (a, b) = (f(g1.a), f(g1.b));
        return [4.0 * a * a * b * b, a * b * (a + b), a * b * (2.0 * a * b + a + b + 1.0) / 2.0];
    }
    let shared: Vec<u16> = [g1.a, g1.b].into_iter().filter(|&x| has(g2, x)).collect();
    if let [s] = shared[..] {
        let a = f(s);
        let b = f(if g1.a == s { g1.b } else { g1.a });
        let c = f(if g2.a == s { g2.b } else { g2.a });
        return [8.0 * a * a * b * c, 2.0 * a * b * c, a * b * c * (2.0 * a + 1.0)];
    }
    let (a, b, c, d) = (f(g1.a), f(g1.b), f(g2.a), f(g2.b));
    [8.0 * a * b * c * d, 0.0, 2.0 * a * b * c * d]
}

fn random_freqs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn unordered_pairs(n: usize) -> Vec<(Genotype, Genotype)> {
    let gs = all_genotypes(n);
    let mut out = Vec::new();
    for (i, &g1) in gs.iter().enumerate() {
        for &g2 in &gs[i..] {
            out.push((g1, g2));
        }
    }
    out
}

fn table2_oracle() -> Outcome {
    let presets = [ThetaIbd::UNRELATED, ThetaIbd::PARENT_CHILD, ThetaIbd::FULL_SIB];
    let p2 = ThetaIbd::new(0.0, 0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = 0.0f64;
    let mut cells = 0usize;
    let vectors = 1200;
    for trial in 0..vectors {
        let n = 2 + trial % 4;
        let p = random_freqs(&mut rng, n);
        for (g1, g2) in unordered_pairs(n) {
            for (x, y) in [(g1, g2), (g2, g1)] {
                let want = table_cells(x, y, &p);
                for (theta, w) in presets.iter().zip(want) {
                    let got = pair_probability_coded(x, y, theta, &p);
                    worst = worst.max((got - w).abs());
                    cells += 1;
                }
                let fs = pair_probability_coded(x, y, &ThetaIbd::FULL_SIB, &p);
                let combo = 0.25 * pair_probability_coded(x, y, &ThetaIbd::UNRELATED, &p)
                    + 0.5 * pair_probability_coded(x, y, &ThetaIbd::PARENT_CHILD, &p)
                    + 0.25 * pair_probability_coded(x, y, &p2, &p);
                check(fs == combo, format!("convex decomposition off at {x:?},{y:?}: {fs} vs {combo}"))?;
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("{vectors} vectors, {cells} cells, max |diff| {worst:.1e}, decomposition exact"))
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut thetas = vec![
        ThetaIbd::UNRELATED,
        ThetaIbd::PARENT_CHILD,
        ThetaIbd::FULL_SIB,
        ThetaIbd::HALF_SIB_PAPER,
        ThetaIbd::HALF_SIB_STANDARD,
    ];
    for _ in 0..20 {
        let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let s = a + b + c;
        thetas.push(ThetaIbd::new(1.0 - b / s - c / s, b / s, c / s).unwrap());
    }
    let mut worst = 0.0f64;
    for n in 1..=8 {
        for _ in 0..5 {
            let p = random_freqs(&mut rng, n);
            let pairs = unordered_pairs(n);
            for t in &thetas {
                let total: f64 = pairs.iter().map(|&(g1, g2)| pair_probability_coded(g1, g2, t, &p)).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    check(worst <= 1e-10, format!("max |sum - 1| = {worst:e}"))?;
    Ok(format!("{} thetas x alphabets 1..8, max |sum - 1| {worst:.1e}", thetas.len()))
}

// ---------------------------------------------------------------------------
// 4. sampler against analytic probabilities
// ---------------------------------------------------------------------------

fn sampler_vs_analytic() -> Outcome {
    const B: usize = 1_000_000;
    let probs = vec![0.1, 0.2, 0.3, 0.4];
    let table = table_from(&["L"], &[&["10", "11", "12", "13"]], vec![vec![probs]], &[1.0]);
    let sim = Simulator::new(&table, PoolWeights::Census).unwrap();
    let p = table.distribution(0, 0).to_vec();
    let mut worst_z = 0.0f64;
    for theta in [ThetaIbd::UNRELATED, ThetaIbd::PARENT_CHILD, ThetaIbd::FULL_SIB] {
        let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, theta);
        cfg.replicates = B;
        cfg.seed = 4;
        cfg.statistics = vec![Statistic::Laf];
        let matrix = sim.simulate_alt(&cfg).map_err(|e| e.to_string())?;
        let laf = matrix.values(Statistic::Laf).unwrap();
        let streams = StreamFactory::new(cfg.seed, Phase::Alternative);
        let mut counts: HashMap<GenotypeCombination, u64> = HashMap::new();
        for (i, &v) in laf.iter().enumerate() {
            let pair = sim.alt_pair(&cfg, &streams, i as u64);
            let (g1, g2) = (pair.first[0], pair.second[0]);
            // the replayed pair is the one simulate_alt scored
            let direct = (pair_probability_coded(g1, g2, &theta, &p) / pair_probability_coded(g1, g2, &ThetaIbd::UNRELATED, &p)).ln();
            check((direct - v).abs() <= 1e-12, format!("replicate {i}: {direct} vs {v}"))?;
            *counts.entry(classify_coded(g1, g2)).or_default() += 1;
        }
        let mut expected: HashMap<GenotypeCombination, f64> = HashMap::new();
        for (g1, g2) in unordered_pairs(4) {
            *expected.entry(classify_coded(g1, g2)).or_default() += pair_probability_coded(g1, g2, &theta, &p);
        }
        for class in GenotypeCombination::ALL {
            let q = expected.get(&class).copied().unwrap_or(0.0);
            let got = counts.get(&class).copied().unwrap_or(0) as f64 / B as f64;
            if q == 0.0 {
                check(got == 0.0, format!("{theta} {class}: impossible class observed"))?;
                continue;
            }
            let z = (got - q).abs() / (q * (1.0 - q) / B as f64).sqrt();
            worst_z = worst_z.max(z);
            check(z <= 4.0, format!("{theta} {class}: {got} vs {q} ({z:.2} sigma)"))?;
        }
    }
    Ok(format!("B=1e6 x 3 thetas, 7 classes, worst {worst_z:.2} sigma"))
}

// ---------------------------------------------------------------------------
// 5. null calibration
// ---------------------------------------------------------------------------

fn desk_table(k: usize, divergence: f64, seed: u64) -> FrequencyTable {
    let mut spec = SynthSpec::uniform(15, 10, k, divergence, seed);
    if k == 4 {
        for (s, (p, n)) in spec
            .subpops
            .iter_mut()
            .zip([(0.1108, 202), (0.3695, 304), (0.3538, 212), (0.1659, 211)])
        {
            s.proportion = p;
            s.sample_size = Some(n);
        }
    }
    synth_table(&spec).unwrap()
}

fn null_calibration() -> Outcome {
    const B: usize = 1_000_000;
    let table = desk_table(4, 0.3, 11);
    let sim = Simulator::new(&table, PoolWeights::default_for(&table)).unwrap();
    let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, ThetaIbd::FULL_SIB);
    cfg.replicates = B;
    cfg.statistics = vec![Statistic::Laf, Statistic::Min];
    cfg.seed = 1;
    let null = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
    // an independent draw from the same null distribution plays the alternative
    cfg.seed = 2;
    let alt = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for stat in [Statistic::Laf, Statistic::Min] {
        let sorted = SortedSample::new(null.values(stat).unwrap());
        for alpha in [0.01, 0.001] {
            let t = sorted.threshold(alpha).map_err(|e| e.to_string())?;
            check(t.realized_fpr <= alpha, format!("{stat} realized FPR {} > {alpha}", t.realized_fpr))?;
            let est = power(alt.values(stat).unwrap(), t.log_value).map_err(|e| e.to_string())?;
            // both the threshold and the exceedance count carry binomial noise
            let sigma = (alpha * (1.0 - alpha) * (2.0 / B as f64)).sqrt();
            let z = (est.power - alpha).abs() / sigma;
            check(z <= 4.0, format!("{stat} alpha={alpha}: power {} ({z:.2} sigma)", est.power))?;
            // the null sample against its own threshold
            let self_power = sorted.power(t.log_value).map_err(|e| e.to_string())?.power;
            check(self_power <= alpha, format!("{stat} self power {self_power} > {alpha}"))?;
            notes.push(format!("{stat}@{alpha}: {:.5} ({z:.2}s)", est.power));
        }
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------------------
// 6. desk-scale structural facts
// ---------------------------------------------------------------------------

fn ordered(matrix: &SampleMatrix) -> Result<(), String> {
    let (min, avg, max) = (
        matrix.values(Statistic::Min).unwrap(),
        matrix.values(Statistic::Avg).unwrap(),
        matrix.values(Statistic::Max).unwrap(),
    );
    for i in 0..matrix.len() {
        // linear-space ordering, compared after exponentiation
        let (lo, mid, hi) = (min[i].exp(), avg[i].exp(), max[i].exp());
        let tol = 1e-12 * hi.abs();
        if !(lo <= mid + tol && mid <= hi + tol) {
            return Err(format!("replicate {i}: MIN {lo} AVG {mid} MAX {hi}"));
        }
        if min[i] > max[i] {
            return Err(format!("replicate {i}: log MIN > log MAX"));
        }
    }
    Ok(())
}

fn desk_scale() -> Outcome {
    const B: usize = 100_000;
    const ALPHA: f64 = 0.0002;
    let table = desk_table(4, 0.3, 21);
    let weights = PoolWeights::default_for(&table);
    let sim = Simulator::new(&table, weights).unwrap();
    let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, ThetaIbd::FULL_SIB);
    cfg.replicates = B;
    cfg.seed = 6;
    let null = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
    let alt = sim.simulate_alt(&cfg).map_err(|e| e.to_string())?;
    ordered(&null)?;
    ordered(&alt)?;

    // the knob must actually separate subpopulation LRs
    let (mx, mn) = (alt.values(Statistic::Max).unwrap(), alt.values(Statistic::Min).unwrap());
    let spread = mx.iter().zip(mn).filter(|(a, b)| *a - *b > 0.1).count() as f64 / B as f64;
    check(spread > 0.9, format!("per-subpop LRs barely differ (spread fraction {spread})"))?;

    let powers: HashMap<Statistic, f64> = Statistic::ALL
        .iter()
        .map(|&s| {
            let t = null_threshold(null.values(s).unwrap(), ALPHA).unwrap();
            (s, power(alt.values(s).unwrap(), t.log_value).unwrap().power)
        })
        .collect();
    let soft: Vec<String> = [Statistic::Laf, Statistic::Avg, Statistic::Min]
        .iter()
        .map(|s| {
            let ok = powers[s] >= powers[&Statistic::Max];
            format!("{s}>=MAX {}", if ok { "yes" } else { "no" })
        })
        .collect();
    println!(
        "      soft expectation (reported only): {} | powers {}",
        soft.join(", "),
        Statistic::ALL
            .iter()
            .map(|s| format!("{s}={:.4}", powers[s]))
            .collect::<Vec<_>>()
            .join(" ")
    );

    // K = 1 collapse
    let k1 = desk_table(1, 0.0, 21);
    let sim1 = Simulator::new(&k1, PoolWeights::default_for(&k1)).unwrap();
    for m in [sim1.simulate_null(&cfg).map_err(|e| e.to_string())?, sim1.simulate_alt(&cfg).map_err(|e| e.to_string())?] {
        let laf = m.values(Statistic::Laf).unwrap();
        for s in Statistic::ALL {
            check(m.values(s).unwrap() == laf, format!("K=1: {s} differs from LAF"))?;
        }
    }

    // determinism under a fixed seed
    let null2 = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
    let alt2 = Simulator::new(&table, weights).unwrap().simulate_alt(&cfg).map_err(|e| e.to_string())?;
    check(null2 == null && alt2 == alt, "rerun with the same seed differs")?;

    Ok(format!("MIN<=AVG<=MAX on {} pairs, K=1 collapse exact, reruns identical", 2 * B))
}

struct PaperRow {
    stat: Statistic,
    ci: (f64, f64),
}

const THAI_FULL_SIB: [PaperRow; 6] = [
    PaperRow { stat: Statistic::Laf, ci: (0.7805, 0.7821) },
    PaperRow { stat: Statistic::Min, ci: (0.7741, 0.7757) },
    PaperRow { stat: Statistic::Avg, ci: (0.7561, 0.7578) },
    PaperRow { stat: Statistic::Max, ci: (0.7401, 0.7419) },
    PaperRow { stat: Statistic::Rmax, ci: (0.6606, 0.6625) },
    PaperRow { stat: Statistic::Rmin, ci: (0.6060, 0.6079) },
];

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Runs only when the published Thai frequencies are supplied.
fn thai_paper_scale() -> Option<Outcome> {
    let freqs = std::env::var_os("KINSHIP_THAI_FREQS")?;
    let b: usize = std::env::var("KINSHIP_PAPER_B")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let run = || -> Outcome {
        let table = FrequencyTable::load_files(&config_dir().join("thai.toml"), Some(Path::new(&freqs)))
            .map_err(|e| e.to_string())?;
        let sim = Simulator::new(&table, PoolWeights::default_for(&table)).map_err(|e| e.to_string())?;
        let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, ThetaIbd::FULL_SIB);
        cfg.replicates = b;
        cfg.seed = 2024;
        let null = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
        let alt = sim.simulate_alt(&cfg).map_err(|e| e.to_string())?;
        let mut prev = f64::INFINITY;
        let mut notes = Vec::new();
        for row in &THAI_FULL_SIB {
            let t = null_threshold(null.values(row.stat).unwrap(), 0.0002).map_err(|e| e.to_string())?;
            let est = power(alt.values(row.stat).unwrap(), t.log_value).map_err(|e| e.to_string())?;
            check(est.power < prev, format!("ordering broken at {}", row.stat))?;
            check(
                est.power >= row.ci.0 - 0.01 && est.power <= row.ci.1 + 0.01,
                format!("{} power {:.4} outside ({:.4}, {:.4}) +- 0.01", row.stat, est.power, row.ci.0, row.ci.1),
            )?;
            prev = est.power;
            notes.push(format!("{}={:.4}", row.stat, est.power));
        }
        Ok(format!("B={b}: {}", notes.join(" > ")))
    };
    Some(run())
}

// ---------------------------------------------------------------------------
// 7. interval arithmetic
// ---------------------------------------------------------------------------

/// P(X >= k) and P(X <= k) for X ~ Binomial(n, p), summed in log space.
fn binomial_tails(k: u64, n: u64, p: f64) -> (f64, f64) {
    let ln_fact = |m: u64| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    let pmf: Vec<f64> = (0..=n)
        .map(|i| (ln_fact(n) - ln_fact(i) - ln_fact(n - i) + i as f64 * p.ln() + (n - i) as f64 * (-p).ln_1p()).exp())
        .collect();
    (pmf[k as usize..].iter().sum(), pmf[..=k as usize].iter().sum())
}

fn interval_math() -> Outcome {
    let (lo, hi) = clopper_pearson(50, 100, 0.95).map_err(|e| e.to_string())?;
    // Beta(50, 51) 2.5% and Beta(51, 50) 97.5% quantiles
    let (want_lo, want_hi) = (0.39832112950330106, 0.6016788704966989);
    check((lo - want_lo).abs() < 1e-9 && (hi - want_hi).abs() < 1e-9, format!("CP ({lo}, {hi})"))?;
    let (up, down) = (binomial_tails(50, 100, lo).0, binomial_tails(50, 100, hi).1);
    check((up - 0.025).abs() < 1e-9 && (down - 0.025).abs() < 1e-9, format!("tails {up} {down}"))?;

    let (b1, n1, b2, n2) = (0.8, 10_000u64, 0.7, 10_000u64);
    let d = power_diff_ci(b1, n1, b2, n2, 0.95).map_err(|e| e.to_string())?;
    let z = 1.959963984540054;
    let half = z * (b1 * (1.0 - b1) / n1 as f64 + b2 * (1.0 - b2) / n2 as f64).sqrt();
    let (e, l, h) = wald_difference(b1, n1, b2, n2, 0.95).map_err(|e| e.to_string())?;
    for (got, want) in [(d.estimate, b1 - b2), (d.ci_low, b1 - b2 - half), (d.ci_high, b1 - b2 + half), (e, d.estimate), (l, d.ci_low), (h, d.ci_high)] {
        check((got - want).abs() <= 1e-12, format!("Wald {got} vs {want}"))?;
    }
    Ok(format!("CP(50,100)=({lo:.10}, {hi:.10}), Wald 0.1 +- {half:.5}"))
}

// ---------------------------------------------------------------------------
// 8. determinism
// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    const B: usize = 100_000;
    let table = desk_table(4, 0.3, 31);
    let sim = Simulator::new(&table, PoolWeights::default_for(&table)).unwrap();
    let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, ThetaIbd::FULL_SIB);
    cfg.replicates = B;
    cfg.seed = 8;
    let mut runs = Vec::new();
    for w in [1, 2, 8] {
        cfg.workers = Some(w);
        runs.push(sim.simulate_null(&cfg).map_err(|e| e.to_string())?);
    }
    check(runs[1] == runs[0] && runs[2] == runs[0], "worker count changed the null sample")?;

    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("meta.toml");
    let csv = dir.path().join("freqs.csv");
    let mut m = table.meta();
    m.freqs = Some("freqs.csv".into());
    std::fs::write(&meta, m.to_toml_string()).unwrap();
    table.write_csv(std::fs::File::create(&csv).unwrap()).unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "8")] {
        let out_dir = dir.path().join(run);
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = kinship_cli::main_with_args(
            [
                "kinship", "power", "--meta", p(&meta), "--test", "full-sib", "--alpha", "0.0002,0.001", "--B", "100000",
                "--seed", "5", "--workers", workers, "--out", p(&out_dir),
            ],
            &mut o,
            &mut e,
        );
        check(code == 0, format!("power exited {code}: {}", String::from_utf8_lossy(&e)))?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|f| {
                let f = f.unwrap();
                (f.file_name().to_string_lossy().into_owned(), std::fs::read(f.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    check(!outputs[0].is_empty() && outputs[0] == outputs[1], "power output files differ between runs")?;
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("workers 1/2/8 bit-identical at B=1e5; {} byte-identical", names.join(", ")))
}

// ---------------------------------------------------------------------------
// 9. performance
// ---------------------------------------------------------------------------

fn performance() -> Outcome {
    const B: usize = 1_000_000;
    let table = desk_table(4, 0.3, 41);
    let sim = Simulator::new(&table, PoolWeights::default_for(&table)).unwrap();
    let mut cfg = SimConfig::new(ThetaIbd::UNRELATED, ThetaIbd::FULL_SIB);
    cfg.replicates = B;
    let start = Instant::now();
    let null = sim.simulate_null(&cfg).map_err(|e| e.to_string())?;
    let alt = sim.simulate_alt(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(null.len() == B && alt.len() == B, "short sample")?;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    check(secs < 600.0, format!("{secs:.1} s on {cores} cores"))?;
    Ok(format!("null+alt B=1e6, K=4, 15 loci, 7 statistics in {secs:.1} s on {cores} core(s)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 worked example", worked_example),
        ("2 table oracle", table2_oracle),
        ("3 normalization", normalization),
        ("4 sampler vs analytic", sampler_vs_analytic),
        ("5 null calibration", null_calibration),
        ("6 desk-scale structure", desk_scale),
        ("7 interval math", interval_math),
        ("8 determinism", determinism),
        ("9 performance", performance),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(note) => println!("PASS  {name} [{secs:.1}s]: {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.1}s]: {why}");
            }
        }
        if name.starts_with('6') {
            match thai_paper_scale() {
                None => println!("SKIP  6b Thai paper-scale ranking: set KINSHIP_THAI_FREQS to a Thai frequency CSV"),
                Some(Ok(note)) => println!("PASS  6b Thai paper-scale ranking: {note}"),
                Some(Err(why)) => {
                    failed += 1;
                    println!("FAIL  6b Thai paper-scale ranking: {why}");
                }
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
