//! Class membership from the sign of δ_n(x) = Σ_k (−1)^k C(n,k) φ(x+kt)/φ(x),
//! which satisfies ⟨B_n(S_t) f, f⟩ = ∫ δ_n |f|².

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::l2grid::StepFunction;
use crate::sampling;
use crate::semigroup::{OperatorHandle, OperatorKind};
use crate::symbol::Symbol;

pub const MAX_ORDER: usize = 64;
pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_TOL_CLASS: f64 = 1e-9;
/// Cancellation error allowance per unit of Σ_k C(n,k) |ρ_k|.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

/// C(n, k) for n ≤ 64, exact in u64.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge { n, max: MAX_ORDER });
    }
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        // c · (n − i) / (i + 1) stays integral; u128 avoids the intermediate overflow
        c = ((c as u128 * (n - i) as u128) / (i + 1) as u128) as u64;
    }
    Ok(c)
}

fn ratios(s: &Symbol, t: f64, n: usize, x: f64) -> Result<Vec<f64>> {
    (0..=n).map(|k| if k == 0 { Ok(1.0) } else { s.growth(x, k as f64 * t) }).collect()
}

/// δ_n(x)
pub fn bracket(s: &Symbol, t: f64, n: usize, x: f64) -> Result<f64> {
    Ok(bracket_with_scale(s, t, n, x)?.0)
}

/// δ_n(x) together with Σ_k C(n,k) |ρ_k(x)|, the size of the terms it cancels.
pub fn bracket_with_scale(s: &Symbol, t: f64, n: usize, x: f64) -> Result<(f64, f64)> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge { n, max: MAX_ORDER });
    }
    let rho = ratios(s, t, n, x)?;
    let mut sum = 0.0;
    let mut scale = 0.0;
    for (k, r) in rho.iter().enumerate() {
        let c = binomial(n, k)? as f64;
        sum += if k % 2 == 0 { c * r } else { -c * r };
        scale += c * r.abs();
    }
    Ok((sum, scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub n: usize,
    pub x: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "label", content = "order", rename_all = "kebab-case")]
pub enum Label {
    Contraction,
    Expansion,
    Isometry,
    MIsometry(usize),
    MHyperexpansive(usize),
    CompletelyHyperexpansive(usize),
    AlternatinglyHyperexpansive(usize),
    CompletelyMonotoneMomentCandidate(usize),
    SubnormalContractionCandidate(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Contraction => write!(f, "contraction"),
            Label::Expansion => write!(f, "expansion"),
            Label::Isometry => write!(f, "isometry"),
            Label::MIsometry(m) => write!(f, "{m}-isometry"),
            Label::MHyperexpansive(m) => write!(f, "{m}-hyperexpansive"),
            Label::CompletelyHyperexpansive(n) => write!(f, "completely-hyperexpansive (up to {n})"),
            Label::AlternatinglyHyperexpansive(n) => write!(f, "alternatingly-hyperexpansive (up to {n})"),
            Label::CompletelyMonotoneMomentCandidate(n) => {
                write!(f, "completely-monotone-moment-candidate (up to {n})")
            }
            Label::SubnormalContractionCandidate(n) => write!(f, "subnormal-contraction candidate (up to {n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedLabel {
    pub label: String,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub symbol: String,
    pub t: f64,
    pub x_max: f64,
    pub max_order: usize,
    pub tol_class: f64,
    /// The most specific label that holds.
    pub headline: Option<String>,
    pub labels: Vec<String>,
    /// Labels that fail, with the first sample that breaks them.
    pub failed: Vec<FailedLabel>,
    pub not_checked: Vec<String>,
    #[serde(skip)]
    pub label_set: Vec<Label>,
}

impl ClassificationReport {
    pub fn has(&self, l: Label) -> bool {
        self.label_set.contains(&l)
    }

    pub fn witness_for(&self, label: &str) -> Option<Witness> {
        self.failed.iter().find(|f| f.label == label).map(|f| f.witness)
    }
}

/// Sign bookkeeping for one order n across the sample grid.
#[derive(Debug, Clone, Copy)]
struct OrderScan {
    /// first x with δ_n > tol
    pos: Option<Witness>,
    /// first x with δ_n < −tol
    neg: Option<Witness>,
}

/// Sample grid: 10⁴ uniform points on `[0, x_max]` plus both sides of
/// every translate of the kinks of φ.
fn grid(s: &Symbol, t: f64, n: usize, x_max: f64) -> Vec<f64> {
    let mut pts = sampling::uniform(0.0, x_max, sampling::DEFAULT_SAMPLES);
    pts.extend(sampling::kink_points(&s.kinks(), t, n, x_max));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Order n passes at x when δ_n(x) is within tol_class · max(1, sup |δ_n|)
/// of the required sign, plus a rounding allowance proportional to the
/// terms being cancelled.
pub fn classify(s: &Symbol, t: f64, max_order: usize, x_max: f64, tol_class: f64) -> Result<ClassificationReport> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("max order must be at least 1".into()));
    }
    if max_order > MAX_ORDER {
        return Err(Error::OrderTooLarge { n: max_order, max: MAX_ORDER });
    }
    let xs = grid(s, t, max_order, x_max);
    let mut scans = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        let values = xs
            .iter()
            .map(|&x| bracket_with_scale(s, t, n, x))
            .collect::<Result<Vec<_>>>()?;
        let size = values.iter().fold(1.0f64, |m, v| m.max(v.0.abs()));
        let mut scan = OrderScan { pos: None, neg: None };
        for (&x, &(delta, scale)) in xs.iter().zip(&values) {
            let tol = tol_class * size + ROUNDING_FLOOR * scale;
            if scan.pos.is_none() && delta > tol {
                scan.pos = Some(Witness { n, x, delta });
            }
            if scan.neg.is_none() && delta < -tol {
                scan.neg = Some(Witness { n, x, delta });
            }
        }
        scans.push(scan);
    }
    let at = |n: usize| scans[n - 1];

    let mut labels: Vec<Label> = Vec::new();
    let mut failed: Vec<FailedLabel> = Vec::new();
    let record = |label: Label, witness: Option<Witness>, labels: &mut Vec<Label>, failed: &mut Vec<FailedLabel>| match witness {
        None => labels.push(label),
        Some(w) => failed.push(FailedLabel { label: label.to_string(), witness: w }),
    };

    // contraction: δ_1 ≥ −tol; expansion: δ_1 ≤ tol
    record(Label::Contraction, at(1).neg, &mut labels, &mut failed);
    record(Label::Expansion, at(1).pos, &mut labels, &mut failed);

    let isometry_at = |n: usize| at(n).pos.or(at(n).neg);
    record(Label::Isometry, isometry_at(1), &mut labels, &mut failed);
    match (1..=max_order).find(|&m| isometry_at(m).is_none()) {
        Some(m) => labels.push(Label::MIsometry(m)),
        None => failed.push(FailedLabel {
            label: format!("m-isometry (m ≤ {max_order})"),
            witness: isometry_at(max_order).unwrap(),
        }),
    }

    // m-hyperexpansive for the largest m with δ_n ≤ tol for all n ≤ m
    let first_pos = (1..=max_order).find(|&n| at(n).pos.is_some());
    match first_pos {
        None => {
            labels.push(Label::MHyperexpansive(max_order));
            labels.push(Label::CompletelyHyperexpansive(max_order));
        }
        Some(n) => {
            if n > 1 {
                labels.push(Label::MHyperexpansive(n - 1));
            }
            failed.push(FailedLabel {
                label: Label::CompletelyHyperexpansive(max_order).to_string(),
                witness: at(n).pos.unwrap(),
            });
        }
    }

    // alternatingly hyperexpansive: (−1)^n δ_n ≥ −tol
    let ahe = (1..=max_order).find_map(|n| if n % 2 == 1 { at(n).pos } else { at(n).neg });
    record(Label::AlternatinglyHyperexpansive(max_order), ahe, &mut labels, &mut failed);

    // Hausdorff moment condition on ρ_k(x) = φ(x+kt)/φ(x): δ_n ≥ −tol
    let cm = (1..=max_order).find_map(|n| at(n).neg);
    record(Label::CompletelyMonotoneMomentCandidate(max_order), cm, &mut labels, &mut failed);
    if cm.is_none() && at(1).neg.is_none() {
        labels.push(Label::SubnormalContractionCandidate(max_order));
    }

    let headline = headline_of(&labels);
    Ok(ClassificationReport {
        symbol: s.to_string(),
        t,
        x_max,
        max_order,
        tol_class,
        headline: headline.map(|l| l.to_string()),
        labels: labels.iter().map(Label::to_string).collect(),
        failed,
        not_checked: vec!["hyponormality".into()],
        label_set: labels,
    })
}

fn headline_of(labels: &[Label]) -> Option<Label> {
    let find = |pred: &dyn Fn(&Label) -> bool| labels.iter().copied().find(|l| pred(l));
    if labels.contains(&Label::Isometry) {
        return Some(Label::Isometry);
    }
    find(&|l| matches!(l, Label::MIsometry(_)))
        .or_else(|| find(&|l| matches!(l, Label::SubnormalContractionCandidate(_))))
        // up to order 2 the complete condition says no more than 2-hyperexpansive
        .or_else(|| find(&|l| matches!(l, Label::CompletelyHyperexpansive(n) if *n > 2)))
        .or_else(|| find(&|l| matches!(l, Label::MHyperexpansive(m) if *m >= 2)))
        .or_else(|| find(&|l| matches!(l, Label::AlternatinglyHyperexpansive(_))))
        .or_else(|| find(&|l| matches!(l, Label::Expansion)))
        .or_else(|| find(&|l| matches!(l, Label::Contraction)))
}

/// ⟨B_n(S_t) f, f⟩ = Σ_k (−1)^k C(n,k) ‖S_t^k f‖², from the operators.
pub fn bracket_quadratic_form(s: &Symbol, t: f64, n: usize, f: &StepFunction, x_max: f64) -> Result<f64> {
    if n as f64 * t > x_max {
        return Err(Error::InvalidArgument(format!("n·t = {} exceeds X_max = {x_max}", n as f64 * t)));
    }
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max + n as f64 * t + f.extent())?;
    let mut acc = 0.0;
    for k in 0..=n {
        let c = binomial(n, k)? as f64;
        let v = op.apply_power(k, f)?.norm_sq();
        acc += if k % 2 == 0 { c * v } else { -c * v };
    }
    Ok(acc)
}

/// ∫ δ_n |f|² with δ_n at cell midpoints, from the symbol.
pub fn bracket_integral(s: &Symbol, t: f64, n: usize, f: &StepFunction) -> Result<f64> {
    let mut acc = 0.0;
    for (a, b, v) in f.cells() {
        if v == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += bracket(s, t, n, 0.5 * (a + b))? * v.norm_sqr() * (b - a);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const X_MAX: f64 = 64.0;

    #[test]
    fn binomials() {
        assert_eq!(binomial(64, 32).unwrap(), 1_832_624_140_942_590_534);
        assert_eq!(binomial(10, 3).unwrap(), 120);
        assert_eq!(binomial(5, 7).unwrap(), 0);
        assert!(matches!(binomial(65, 1), Err(Error::OrderTooLarge { n: 65, max: 64 })));
        for n in 0..=64 {
            let row: u128 = (0..=n).map(|k| binomial(n, k).unwrap() as u128).sum();
            assert_eq!(row, 1u128 << n);
        }
    }

    #[test]
    fn bracket_examples() {
        for t in [0.1, 1.0, 3.0] {
            for x in [0.0, 0.7, 20.0] {
                assert!(bracket(&Symbol::affine(), t, 2, x).unwrap().abs() < 1e-13);
                assert_eq!(bracket(&Symbol::constant(4.0), t, 1, x).unwrap(), 0.0);
            }
        }
        let d = bracket(&Symbol::exponential(2f64.exp()), 1.0, 1, 3.0).unwrap();
        assert!((d - (1.0 - 2f64.exp())).abs() < 1e-12);
        assert!((d + 6.389_056_098_930_65).abs() < 1e-12);
        assert!(bracket(&Symbol::affine(), 1.0, 65, 0.0).is_err());
    }

    fn expect(s: Symbol, t: f64, n: usize, headline: &str, must: &[Label]) {
        let r = classify(&s, t, n, X_MAX, DEFAULT_TOL_CLASS).unwrap();
        assert_eq!(r.headline.as_deref(), Some(headline), "{s}: {:?}", r.labels);
        for l in must {
            assert!(r.has(*l), "{s}: missing {l}");
        }
    }

    #[test]
    fn golden_labels() {
        expect(Symbol::constant(1.0), 1.0, 16, "isometry", &[
            Label::MIsometry(1),
            Label::CompletelyHyperexpansive(16),
            Label::Contraction,
            Label::Expansion,
        ]);
        expect(Symbol::affine(), 1.0, 8, "2-isometry", &[Label::MHyperexpansive(8), Label::CompletelyHyperexpansive(8)]);
        expect(Symbol::reciprocal(), 1.0, 8, "subnormal-contraction candidate (up to 8)", &[
            Label::Contraction,
            Label::CompletelyMonotoneMomentCandidate(8),
        ]);
        expect(Symbol::piecewise_cap(), 0.25, 2, "2-hyperexpansive", &[]);
        expect(Symbol::piecewise_cap(), 0.25, 16, "2-hyperexpansive", &[]);
        expect(Symbol::exponential(2.0), 1.0, 8, "alternatingly-hyperexpansive (up to 8)", &[Label::Expansion]);
        expect(Symbol::exponential(2.0), 0.5, 16, "alternatingly-hyperexpansive (up to 16)", &[]);
    }

    #[test]
    fn failed_labels_carry_witnesses() {
        let r = classify(&Symbol::piecewise_cap(), 0.25, 16, X_MAX, DEFAULT_TOL_CLASS).unwrap();
        let w = r.witness_for("completely-hyperexpansive (up to 16)").unwrap();
        assert_eq!(w.n, 3);
        assert!(w.delta > 0.0 && w.x < 1.0);
        assert!(r.witness_for("contraction").is_some());
    }

    #[test]
    fn bracket_quadratic_form_examples() {
        let x = X_MAX;
        let f = StepFunction::indicator(0.0, 1.0);
        assert!(bracket_quadratic_form(&Symbol::affine(), 1.0, 2, &f, x).unwrap().abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = StepFunction::random_unit(&mut rng, 0.0, 0.1, 30);
        assert!(bracket_quadratic_form(&Symbol::constant(1.0), 0.7, 1, &g, x).unwrap().abs() < 1e-12);
        let v = bracket_quadratic_form(&Symbol::exponential(2f64.exp()), 1.0, 1, &f, x).unwrap();
        assert!((v - (1.0 - 2f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn labels_are_consistent() {
        for (s, t) in [
            (Symbol::constant(2.0), 1.0),
            (Symbol::affine(), 0.5),
            (Symbol::reciprocal(), 1.0),
            (Symbol::piecewise_cap(), 0.25),
            (Symbol::exponential(3.0), 0.5),
        ] {
            let r = classify(&s, t, 12, X_MAX, DEFAULT_TOL_CLASS).unwrap();
            if r.has(Label::CompletelyHyperexpansive(12)) {
                assert!(r.has(Label::MHyperexpansive(12)));
            }
            if r.has(Label::Isometry) {
                for n in 1..=12 {
                    assert!(bracket(&s, t, n, 0.3).unwrap().abs() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pascal_recurrence(n in 0usize..20, x in 0.0f64..10.0, t in 0.05f64..2.0, which in 0usize..4) {
            let s = [Symbol::affine(), Symbol::reciprocal(), Symbol::piecewise_cap(), Symbol::exponential(1.5)][which].clone();
            let lhs = bracket(&s, t, n + 1, x).unwrap();
            let rhs = bracket(&s, t, n, x).unwrap() - s.growth(x, t).unwrap() * bracket(&s, t, n, x + t).unwrap();
            let (_, scale) = bracket_with_scale(&s, t, n + 1, x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn operator_and_symbol_brackets_agree(seed in 0u64..1000, n in 0usize..7, which in 0usize..5) {
            let s = [Symbol::constant(1.0), Symbol::affine(), Symbol::reciprocal(), Symbol::piecewise_cap(), Symbol::exponential(2.0)][which].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = StepFunction::random_unit(&mut rng, 0.0, 1.0 / 64.0, 128);
            let a = bracket_quadratic_form(&s, 0.5, n, &f, X_MAX).unwrap();
            let b = bracket_integral(&s, 0.5, n, &f).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
