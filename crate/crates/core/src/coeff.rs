//! Coefficient approximation: replace each weight `w` with a neighbor within
//! `±e` whose hardwired multiplier is cheaper, balancing the signed errors of
//! every weighted sum.
//!
//! Per coefficient two candidates are kept: the minimum-area value in
//! `[w, w+e]` (non-positive error `w - w̃`) and the minimum-area value in
//! `[w-e, w]` (non-negative error), both clipped to the representable signed
//! range. [`select_config`] then picks one candidate per coefficient so that
//! `|sum of errors|` is minimal, breaking ties by total multiplier area. A
//! dynamic program over reachable error sums replaces the quadratic-blowup
//! exhaustive search; the two are verified equivalent in tests. Intercepts
//! are never touched — they appear once per sum and have no multiplier.

use crate::error::{Error, Result};
use crate::model::{ApproxInfo, QuantizedModel};
use crate::netlist::CellLibrary;
use crate::synth::mult::{area_bm, AreaCache};

/// One replacement candidate: a coefficient value and its multiplier area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub value: i64,
    pub area: f64,
}

/// The candidate set R for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub index: usize,
    pub w: i64,
    /// Minimum-area value in the clipped segment [w, w+e]; error w - w̃ <= 0.
    pub minus: Candidate,
    /// Minimum-area value in the clipped segment [w-e, w]; error w - w̃ >= 0.
    pub plus: Candidate,
}

/// `area_bm`, through the cache when one is given.
pub fn area_of(w: i64, in_bits: u32, coeff_bits: u32, lib: &CellLibrary, cache: Option<&AreaCache>) -> Result<f64> {
    match cache {
        Some(c) => c.area(w, in_bits, coeff_bits, lib),
        None => area_bm(w, in_bits, coeff_bits, lib),
    }
}

/// Minimum-area value in [lo, hi]; area ties break toward the value closest
/// to `w`, then toward the smaller absolute value.
fn best_in_segment(
    lo: i64,
    hi: i64,
    w: i64,
    in_bits: u32,
    coeff_bits: u32,
    lib: &CellLibrary,
    cache: Option<&AreaCache>,
) -> Result<Candidate> {
    debug_assert!(lo <= hi);
    let mut best: Option<Candidate> = None;
    for v in lo..=hi {
        let area = area_of(v, in_bits, coeff_bits, lib, cache)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (area, (v - w).abs(), v.abs()) < (b.area, (b.value - w).abs(), b.value.abs())
            }
        };
        if better {
            best = Some(Candidate { value: v, area });
        }
    }
    Ok(best.expect("non-empty segment"))
}

/// Build the candidate set for every coefficient of one weighted sum.
/// Segments are clipped to the signed `coeff_bits` range at the borders.
pub fn build_candidates(
    weights: &[i64],
    e: i64,
    in_bits: u32,
    coeff_bits: u32,
    lib: &CellLibrary,
    cache: Option<&AreaCache>,
) -> Result<Vec<CandidatePair>> {
    if e < 0 {
        return Err(Error::InvalidArgument(format!("negative threshold e={e}")));
    }
    let lo_rep = -(1i64 << (coeff_bits - 1));
    let hi_rep = (1i64 << (coeff_bits - 1)) - 1;
    weights
        .iter()
        .enumerate()
        .map(|(index, &w)| {
            debug_assert!((lo_rep..=hi_rep).contains(&w));
            let minus = best_in_segment(w, (w + e).min(hi_rep), w, in_bits, coeff_bits, lib, cache)?;
            let plus = best_in_segment((w - e).max(lo_rep), w, w, in_bits, coeff_bits, lib, cache)?;
            Ok(CandidatePair {
                index,
                w,
                minus,
                plus,
            })
        })
        .collect()
}

/// The chosen configuration for one weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSelection {
    pub values: Vec<i64>,
    /// sum(w_i - w̃_i)
    pub error_sum: i64,
    /// sum(area_bm(w̃_i))
    pub area: f64,
}

/// Exact optimum of (|Σ error|, then Σ area) over all 2^N candidate choices,
/// found by a dynamic program over reachable signed error sums. The result's
/// error sum always satisfies |Σ error| <= max per-coefficient error, because
/// every candidate set offers one non-negative and one non-positive error.
pub fn select_config(pairs: &[CandidatePair]) -> CoeffSelection {
    assert!(!pairs.is_empty(), "select_config needs at least one pair");
    // per pair: (error, area, value); coinciding candidates collapse to the
    // cheaper one
    let opts: Vec<Vec<(i64, f64, i64)>> = pairs
        .iter()
        .map(|p| {
            if p.plus.value == p.minus.value {
                let area = p.minus.area.min(p.plus.area);
                vec![(p.w - p.minus.value, area, p.minus.value)]
            } else {
                vec![
                    (p.w - p.minus.value, p.minus.area, p.minus.value),
                    (p.w - p.plus.value, p.plus.area, p.plus.value),
                ]
            }
        })
        .collect();
    let bound: i64 = opts
        .iter()
        .map(|o| o.iter().map(|&(e, _, _)| e.abs()).max().unwrap())
        .sum();
    let width = (2 * bound + 1) as usize;
    let off = bound as usize;

    let mut dp = vec![f64::INFINITY; width];
    dp[off] = 0.0;
    // choice[k][s]: option index at step k that reaches error sum s - off
    let mut choice: Vec<Vec<u8>> = Vec::with_capacity(opts.len());
    for o in &opts {
        let mut next = vec![f64::INFINITY; width];
        let mut ch = vec![u8::MAX; width];
        for (s, &a) in dp.iter().enumerate() {
            if a.is_infinite() {
                continue;
            }
            for (k, &(err, area, _)) in o.iter().enumerate() {
                let t = (s as i64 + err) as usize; // within bounds by construction
                let total = a + area;
                if total < next[t] {
                    next[t] = total;
                    ch[t] = k as u8;
                }
            }
        }
        dp = next;
        choice.push(ch);
    }

    // best reachable sum: minimal |sum|, then minimal area, scanning low to
    // high for determinism
    let mut best = usize::MAX;
    for (s, &a) in dp.iter().enumerate() {
        if a.is_infinite() {
            continue;
        }
        if best == usize::MAX {
            best = s;
            continue;
        }
        let key = (s.abs_diff(off), a);
        let bkey = (best.abs_diff(off), dp[best]);
        if key < bkey {
            best = s;
        }
    }

    let mut values = vec![0i64; pairs.len()];
    let mut chosen_area = vec![0.0f64; pairs.len()];
    let mut s = best;
    for k in (0..opts.len()).rev() {
        let opt = choice[k][s] as usize;
        let (err, a, v) = opts[k][opt];
        values[k] = v;
        chosen_area[k] = a;
        s = (s as i64 - err) as usize;
    }
    debug_assert_eq!(s, off);
    // sum areas in index order so the float total is reproducible
    let area = chosen_area.iter().fold(0.0, |acc, a| acc + a);
    let error_sum = best as i64 - off as i64;
    let emax = opts
        .iter()
        .map(|o| o.iter().map(|&(e, _, _)| e.abs()).max().unwrap())
        .max()
        .unwrap_or(0);
    debug_assert!(error_sum.abs() <= emax, "balancing bound violated");
    CoeffSelection {
        values,
        error_sum,
        area,
    }
}

/// Apply coefficient approximation to every weighted sum of a model,
/// independently, and attach provenance. Intercepts are preserved except in
/// the degenerate case where grown weight magnitudes squeeze the accumulator
/// budget, where the intercept is clamped to keep the model representable.
pub fn approximate_model(
    q: &QuantizedModel,
    e: i64,
    lib: &CellLibrary,
    cache: Option<&AreaCache>,
) -> Result<QuantizedModel> {
    q.validate()?;
    if e < 0 {
        return Err(Error::InvalidArgument(format!("negative threshold e={e}")));
    }
    let mut out = q.clone();
    let coeff_bits = q.spec.coeff_bits;
    let mut error_sums = Vec::new();
    let mut changed = 0usize;
    let mut area_before = 0.0f64;
    let mut area_after = 0.0f64;

    {
        let mut apply = |name: String, sum: &mut crate::model::QuantizedSum, in_bits: u32| -> Result<()> {
            for &w in &sum.weights {
                area_before += area_of(w, in_bits, coeff_bits, lib, cache)?;
            }
            let pairs = build_candidates(&sum.weights, e, in_bits, coeff_bits, lib, cache)?;
            let sel = select_config(&pairs);
            area_after += sel.area;
            changed += sel
                .values
                .iter()
                .zip(&sum.weights)
                .filter(|(a, b)| a != b)
                .count();
            sum.weights = sel.values;
            // keep the accumulator representable if weight growth ate the
            // intercept's budget (practically unreachable for trained models)
            let width = crate::model::quantize::acc_width(sum.weights.len(), in_bits, coeff_bits);
            let in_max = (1i64 << in_bits) - 1;
            let wsum: i64 = sum.weights.iter().map(|w| w.abs() * in_max).sum();
            let budget = ((1i64 << (width - 1)) - 1) - wsum;
            sum.intercept = sum.intercept.clamp(-budget, budget);
            error_sums.push((name, sel.error_sum));
            Ok(())
        };

        let layers_in_bits: Vec<u32> = out.layers.iter().map(|l| l.in_bits).collect();
        for (li, layer) in out.layers.iter_mut().enumerate() {
            for (j, sum) in layer.sums.iter_mut().enumerate() {
                apply(format!("l{li}.s{j}"), sum, layers_in_bits[li])?;
            }
        }
        let u = out.spec.input_bits;
        for (ci, c) in out.classifiers.iter_mut().enumerate() {
            apply(format!("d{ci}"), &mut c.sum, u)?;
        }
    }

    out.approx = Some(ApproxInfo {
        e,
        error_sums,
        changed,
        mult_area_before: area_before,
        mult_area_after: area_after,
    });
    out.validate()?;
    Ok(out)
}

/// Relative multiplier-area reductions achievable with threshold `e`, over
/// every representable coefficient whose exact multiplier has non-zero area.
/// This is the per-multiplier view behind the area-reduction trend analysis.
pub fn relative_reductions(
    e: i64,
    in_bits: u32,
    coeff_bits: u32,
    lib: &CellLibrary,
    cache: Option<&AreaCache>,
) -> Result<Vec<f64>> {
    let lo = -(1i64 << (coeff_bits - 1));
    let hi = (1i64 << (coeff_bits - 1)) - 1;
    let mut out = Vec::new();
    for w in lo..=hi {
        let base = area_of(w, in_bits, coeff_bits, lib, cache)?;
        if base == 0.0 {
            continue;
        }
        let pairs = build_candidates(&[w], e, in_bits, coeff_bits, lib, cache)?;
        let best = pairs[0].minus.area.min(pairs[0].plus.area);
        out.push((base - best) / base);
    }
    Ok(out)
}
