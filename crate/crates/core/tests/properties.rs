use proptest::prelude::*;

use shrinklab::coding::{build_towers, check_towers};
use shrinklab::harness::sample_points;
use shrinklab::iet::rotation_iet;
use shrinklab::numbers::{cf_expand, CFExpansion, Rational};
use shrinklab::targets::{hit_ratio_series, window_correlation, window_count, RadiusSpec};
use shrinklab::undetermined::{undetermined_series, AtomContext, AtomMode};

fn frac(p: i64, q: i64) -> Rational {
    Rational::frac(p, q)
}

fn arb_cf(max_depth: usize) -> impl Strategy<Value = CFExpansion> {
    prop::collection::vec(1u64..=5, 3..=max_depth).prop_map(|q| CFExpansion::new(q).unwrap().canonical())
}

/// Atom of the partition cut at `{k alpha mod 1 : 0 <= k <= j + 1}` that
/// contains `1 - alpha`, by sorting the cut points.
fn atom_by_sorting(alpha: &Rational, j: u64) -> (Rational, Rational) {
    let mut cuts: Vec<Rational> = (0..=j + 1).map(|k| (Rational::from_integer(k) * alpha).fract_part()).collect();
    cuts.sort();
    cuts.dedup();
    let target = Rational::one() - alpha;
    let k = cuts.partition_point(|c| *c <= target);
    let left = cuts[k - 1].clone();
    let right = cuts.get(k).cloned().unwrap_or_else(Rational::one);
    (left, right)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expansion_round_trips(cf in arb_cf(18)) {
        prop_assert_eq!(cf_expand(&cf.value(), usize::MAX).unwrap(), cf);
    }

    #[test]
    fn formula_atom_matches_sorted_cuts(cf in arb_cf(12), pick in 0u64..1000) {
        let ctx = AtomContext::from_cf(&cf);
        prop_assume!(ctx.max_index() >= 1);
        let j = 1 + pick % ctx.max_index().min(400);
        let d = ctx.atom(j, AtomMode::Formula).unwrap();
        let (left, right) = atom_by_sorting(ctx.alpha(), j);
        prop_assert_eq!(d.u.left(), &left);
        prop_assert_eq!(d.measure, right - &left);
    }

    #[test]
    fn three_gaps(cf in arb_cf(16), n in 2u64..300) {
        let alpha = cf.value();
        let t = rotation_iet(&alpha).unwrap();
        prop_assume!(n < t.horizon());
        let mut pts: Vec<Rational> = (0..n).map(|k| (Rational::from_integer(k) * &alpha).fract_part()).collect();
        pts.sort();
        let mut gaps: Vec<Rational> = pts.windows(2).map(|w| w[1].clone() - &w[0]).collect();
        gaps.push(Rational::one() - &pts[pts.len() - 1]);
        gaps.sort();
        gaps.dedup();
        prop_assert!(gaps.len() <= 3);
        if gaps.len() == 3 {
            prop_assert_eq!(gaps[0].clone() + &gaps[1], gaps[2].clone());
        }
    }

    #[test]
    fn rotation_towers_partition(cf in arb_cf(20), n in 2usize..40) {
        let t = rotation_iet(&cf.value()).unwrap();
        prop_assume!(((4 * n) as u64) < t.horizon());
        let towers = build_towers(&t, n).unwrap();
        let c = check_towers(&t, &towers, n);
        prop_assert!(c.partition && c.heights_in_range);
        let mass = towers.iter().fold(Rational::zero(), |acc, tw| acc + &(tw.base.length().clone() * Rational::from_integer(tw.height)));
        prop_assert_eq!(mass, Rational::one());
    }
}

#[test]
fn hit_counts_match_direct_iteration() {
    let alpha = CFExpansion::golden(30).value();
    let t = rotation_iet(&alpha).unwrap();
    let y = frac(1, 2);
    let spec = RadiusSpec::Harmonic(frac(1, 2));
    let cps = [10, 100, 1000, 3000];
    for x in sample_points(7, 4) {
        let s = hit_ratio_series(&t, &x, &y, &spec, &cps).unwrap();
        let mut p = x.clone();
        let mut hits = 0u64;
        let mut k = 0;
        for i in 1..=3000u64 {
            p = (p + &alpha).fract_part();
            // |T^i x - y| < r_i on the circle, with r_i = 1/(2i)
            let d = (p.clone() - &y).abs();
            let d = d.clone().min(Rational::one() - &d);
            if d < frac(1, 2 * i as i64) {
                hits += 1;
            }
            if i == cps[k] {
                assert_eq!(s.checkpoints[k].hits, hits, "x = {x}, N = {i}");
                k += 1;
            }
        }
    }
}

#[test]
fn undetermined_counts_match_membership() {
    let cf = CFExpansion::new(vec![2, 1, 3, 1, 2, 4, 1, 1, 3, 2]).unwrap();
    let ctx = AtomContext::from_cf(&cf);
    let n = 300.min(ctx.max_index());
    for x in sample_points(11, 6) {
        let s = undetermined_series(&ctx, &x, &[n]).unwrap();
        let direct = (1..=n).filter(|&j| ctx.v(j, AtomMode::Brute).unwrap().contains(&x)).count() as u64;
        assert_eq!(s.rows[0].hits, direct);
    }
}

#[test]
fn window_correlation_agrees_with_sampling() {
    let t = rotation_iet(&CFExpansion::golden(40).value()).unwrap();
    let (y, spec) = (frac(1, 2), RadiusSpec::Harmonic(frac(1, 1)));
    let (ni, nj) = (20, 80);
    let exact = window_correlation(&t, &y, &spec, ni, nj, 1 << 20).unwrap().to_f64();
    let xs = sample_points(3, 4000);
    let prods: Vec<f64> = xs
        .iter()
        .map(|x| (window_count(&t, x, &y, &spec, ni).unwrap() * window_count(&t, x, &y, &spec, nj).unwrap()) as f64)
        .collect();
    let mean = prods.iter().sum::<f64>() / prods.len() as f64;
    let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (prods.len() - 1) as f64;
    let se = (var / prods.len() as f64).sqrt();
    assert!((mean - exact).abs() < 5.0 * se + 1e-9, "exact {exact}, sampled {mean} ± {se}");
}
