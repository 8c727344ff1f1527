//! Nodal clipping onto `[0, kappa]` and the complementary split.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleBox {
    pub upper: f64,
}

impl AdmissibleBox {
    pub fn new(upper: f64) -> Result<Self> {
        if !(upper >= 0.0 && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "upper bound must be finite and nonnegative, got {upper}"
            )));
        }
        Ok(AdmissibleBox { upper })
    }

    pub fn lower(&self) -> f64 {
        0.0
    }

    #[inline]
    pub fn clip<S: Scalar>(&self, v: S) -> S {
        v.min(S::of(self.upper)).max(S::zero())
    }
}

/// `max(0, min(v_i, kappa))` on every entry.
pub fn clip<S: Scalar>(v: &[S], bx: AdmissibleBox) -> Vec<S> {
    v.iter().map(|&x| bx.clip(x)).collect()
}

/// Clips the entries flagged in `unknown` and passes the others through.
pub fn clip_plus<S: Scalar>(v: &[S], bx: AdmissibleBox, unknown: &[bool]) -> Vec<S> {
    v.iter()
        .zip(unknown)
        .map(|(&x, &u)| if u { bx.clip(x) } else { x })
        .collect()
}

/// `v - v_plus`.
pub fn complement<S: Scalar>(v: &[S], v_plus: &[S]) -> Vec<S> {
    v.iter().zip(v_plus).map(|(&a, &b)| a - b).collect()
}

/// `({i : v_i <= 0}, {i : v_i >= kappa})`.
pub fn active_sets<S: Scalar>(v: &[S], bx: AdmissibleBox) -> (Vec<usize>, Vec<usize>) {
    let k = S::of(bx.upper);
    let lower = (0..v.len()).filter(|&i| v[i] <= S::zero()).collect();
    let upper = (0..v.len()).filter(|&i| v[i] >= k).collect();
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let bx = AdmissibleBox::new(1.0).unwrap();
        let v = [-0.5f64, 0.3, 1.7];
        let p = clip(&v, bx);
        assert_eq!(p, vec![0.0, 0.3, 1.0]);
        let m = complement(&v, &p);
        assert_eq!(&m[..2], &[-0.5, 0.0]);
        assert!((m[2] - 0.7).abs() < 1e-15);
        assert_eq!(active_sets(&[-1.0, 2.0], bx), (vec![0], vec![1]));
        assert_eq!(active_sets(&[0.2, 0.9], bx), (vec![], vec![]));
        assert_eq!(
            clip_plus(&v, bx, &[false, true, true]),
            vec![-0.5, 0.3, 1.0]
        );
        assert!(AdmissibleBox::new(-1.0).is_err());
        assert!(AdmissibleBox::new(f64::INFINITY).is_err());
    }

    fn vectors() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
        (0.0f64..10.0, 1usize..40).prop_flat_map(|(k, n)| {
            (
                Just(k),
                prop::collection::vec(-20.0f64..20.0, n),
                prop::collection::vec(-20.0f64..20.0, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn idempotent_and_in_box((k, v, _) in vectors()) {
            let bx = AdmissibleBox::new(k).unwrap();
            let p = clip(&v, bx);
            prop_assert_eq!(clip(&p, bx), p.clone());
            prop_assert!(p.iter().all(|&x| (0.0..=k).contains(&x)));
        }

        #[test]
        fn lipschitz((k, v, w) in vectors()) {
            let bx = AdmissibleBox::new(k).unwrap();
            let (pv, pw) = (clip(&v, bx), clip(&w, bx));
            for i in 0..v.len() {
                prop_assert!((pv[i] - pw[i]).abs() <= (v[i] - w[i]).abs());
            }
        }

        #[test]
        fn shift_identity((k, v, _) in vectors()) {
            let bx = AdmissibleBox::new(k).unwrap();
            let p = clip(&v, bx);
            let m = complement(&v, &p);
            let sum: Vec<f64> = p.iter().zip(&m).map(|(a, b)| a + b).collect();
            prop_assert_eq!(clip(&sum, bx), p);
        }

        #[test]
        fn complement_sign_pattern((k, v, _) in vectors()) {
            let bx = AdmissibleBox::new(k).unwrap();
            let p = clip(&v, bx);
            let m = complement(&v, &p);
            let (lo, hi) = active_sets(&v, bx);
            for i in 0..v.len() {
                if m[i] < 0.0 { prop_assert!(p[i] == 0.0 && lo.contains(&i)); }
                if m[i] > 0.0 { prop_assert!(p[i] == k && hi.contains(&i)); }
            }
            let support = m.iter().filter(|x| **x != 0.0).count();
            let exact_hits = v.iter().filter(|&&x| x == 0.0 || x == k).count();
            let mut active: Vec<usize> = lo.iter().chain(&hi).copied().collect();
            active.sort_unstable();
            active.dedup();
            prop_assert_eq!(support, active.len() - exact_hits);
        }

        #[test]
        fn nodal_monotonicity((k, v, w) in vectors(), sigma in prop::collection::vec(0.01f64..10.0, 40)) {
            let bx = AdmissibleBox::new(k).unwrap();
            let (pv, pw) = (clip(&v, bx), clip(&w, bx));
            let (mv, mw) = (complement(&v, &pv), complement(&w, &pw));
            let mut s = 0.0;
            for i in 0..v.len() {
                let t = (mv[i] - mw[i]) * (pv[i] - pw[i]);
                prop_assert!(t >= 0.0);
                s += sigma[i] * t;
            }
            prop_assert!(s >= 0.0);
        }
    }
}
