//! Shared helpers for the acceptance suite: verdict printing, dataset
//! location, a reference implementation of the overlapping NMI, and random
//! cover generation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use metacode_core::CommunityCover;

/// Print the one-line verdict for a criterion, then fail the test if it
/// did not hold.
pub fn verdict(id: usize, name: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {id:02} {name}: {word} — {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// Root of the cargo workspace (two levels above this crate).
pub fn workspace_root() -> PathBuf {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

/// Path stem for a Facebook ego network (`data/facebook/<ego>`), or an
/// actionable message when the archive has not been fetched yet.
pub fn facebook_stem(ego: &str) -> Result<PathBuf, String> {
    let dir = workspace_root().join("data/facebook");
    let edges = dir.join(format!("{ego}.edges"));
    if edges.is_file() {
        Ok(dir.join(ego))
    } else {
        Err(format!(
            "dataset missing: {} not found; run scripts/fetch_facebook.sh (needs network \
             access) and re-run this suite",
            edges.display()
        ))
    }
}

fn hbit(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Reference overlapping NMI, transcribed independently from the
/// lack-of-information formulation and computed in bits rather than nats.
/// The normalized result must agree with the production implementation —
/// the ratio `H(X_k|Y) / H(X_k)` is base-invariant.
pub fn reference_nmi(a: &CommunityCover, b: &CommunityCover, n: usize) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let nf = n as f64;
    let side = |xs: &CommunityCover, ys: &CommunityCover| -> f64 {
        let mut acc = 0.0;
        for x in xs.communities() {
            let px = x.len() as f64 / nf;
            let hx = hbit(px) + hbit(1.0 - px);
            if hx == 0.0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for y in ys.communities() {
                let both = x.intersection(y).count();
                let p = [
                    (n + both - x.len() - y.len()) as f64 / nf, // in neither
                    (y.len() - both) as f64 / nf,               // only y
                    (x.len() - both) as f64 / nf,               // only x
                    both as f64 / nf,                           // in both
                ];
                if hbit(p[3]) + hbit(p[0]) < hbit(p[2]) + hbit(p[1]) {
                    continue;
                }
                let joint: f64 = p.iter().copied().map(hbit).sum();
                let py = y.len() as f64 / nf;
                let hy = hbit(py) + hbit(1.0 - py);
                best = best.min(joint - hy);
            }
            if !best.is_finite() {
                best = hx;
            }
            acc += best / hx;
        }
        acc / xs.n_communities() as f64
    };
    1.0 - 0.5 * (side(a, b) + side(b, a))
}

/// Exhaustive best-match F1 oracle: plain double loops, no shortcuts.
pub fn reference_f1(a: &CommunityCover, b: &CommunityCover) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let f1 = |x: &BTreeSet<usize>, y: &BTreeSet<usize>| -> f64 {
        let both = x.intersection(y).count() as f64;
        2.0 * both / (x.len() + y.len()) as f64
    };
    let mut forward = 0.0;
    for x in a.communities() {
        let mut best: f64 = 0.0;
        for y in b.communities() {
            best = best.max(f1(x, y));
        }
        forward += best;
    }
    let mut backward = 0.0;
    for y in b.communities() {
        let mut best: f64 = 0.0;
        for x in a.communities() {
            best = best.max(f1(x, y));
        }
        backward += best;
    }
    forward / (2.0 * a.n_communities() as f64) + backward / (2.0 * b.n_communities() as f64)
}

/// A random cover over `n` nodes with 1..=4 non-empty communities.
pub fn random_cover(rng: &mut ChaCha8Rng, n: usize) -> CommunityCover {
    let k = rng.random_range(1..=4);
    let communities = (0..k)
        .map(|_| {
            let mut c: BTreeSet<usize> =
                (0..n).filter(|_| rng.random::<f64>() < 0.35).collect();
            if c.is_empty() {
                c.insert(rng.random_range(0..n));
            }
            c
        })
        .collect();
    CommunityCover::new(communities)
}

/// Deterministic generator for the metric-oracle comparisons.
pub fn cover_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
