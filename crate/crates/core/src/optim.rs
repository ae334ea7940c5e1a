//! Derivative-free simplex minimization used by the likelihood fits.
//!
//! Parameters are optimized in an unconstrained space; callers map bounded
//! quantities through [`bounded`] / [`unbounded`].

use crate::scalar::Scalar;

/// Nelder-Mead with dimension-adaptive coefficients and simplex restarts.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead<T> {
    /// Total objective evaluations across all restarts.
    pub max_evals: usize,
    /// Spread of simplex values, relative to `1 + |f|`, that counts as
    /// converged.
    pub ftol: T,
    /// How many times a fresh simplex is rebuilt around the incumbent.
    pub restarts: usize,
    /// Edge length of the initial simplex.
    pub step: T,
}

impl<T: Scalar> Default for NelderMead<T> {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: T::lit(1e-8).max(T::epsilon() * T::lit(4.0)),
            restarts: 3,
            step: T::lit(0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evals: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F> Counted<F> {
    fn call<T: Scalar>(&mut self, x: &[T]) -> T
    where
        F: FnMut(&[T]) -> T,
    {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    }
}

impl<T: Scalar> NelderMead<T> {
    pub fn minimize<F: FnMut(&[T]) -> T>(&self, f: F, x0: &[T]) -> Minimum<T> {
        let mut obj = Counted { f, evals: 0 };
        let mut best_x = x0.to_vec();
        let mut best_v = obj.call(x0);
        if x0.is_empty() {
            return Minimum {
                x: best_x,
                value: best_v,
                evals: obj.evals,
                converged: true,
            };
        }
        let mut converged = false;
        for round in 0..=self.restarts {
            if obj.evals >= self.max_evals {
                break;
            }
            let (x, v, ok) = self.run_simplex(&mut obj, &best_x, best_v);
            let improvement = best_v - v;
            let improved = v < best_v;
            if improved {
                best_x = x;
                best_v = v;
            }
            converged = ok;
            if round > 0 && !(improvement > self.tolerance(best_v, best_v)) {
                break;
            }
        }
        Minimum {
            x: best_x,
            value: best_v,
            evals: obj.evals,
            converged,
        }
    }

    fn tolerance(&self, lo: T, hi: T) -> T {
        self.ftol * (T::one() + (lo.abs() + hi.abs()) * T::lit(0.5))
    }

    fn run_simplex<F: FnMut(&[T]) -> T>(
        &self,
        obj: &mut Counted<F>,
        x0: &[T],
        v0: T,
    ) -> (Vec<T>, T, bool) {
        let n = x0.len();
        let nf = T::of(n);
        let reflect = T::one();
        let expand = T::one() + T::lit(2.0) / nf;
        let contract = T::lit(0.75) - T::lit(0.5) / nf;
        let shrink = T::one() - T::one() / nf;
        let shrink = if n == 1 { T::lit(0.5) } else { shrink };

        let mut pts: Vec<Vec<T>> = Vec::with_capacity(n + 1);
        let mut vals: Vec<T> = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        vals.push(v0);
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] = p[i] + self.step;
            vals.push(obj.call(&p));
            pts.push(p);
        }

        let mut order: Vec<usize> = (0..=n).collect();
        loop {
            order.sort_by(|&a, &b| {
                vals[a]
                    .partial_cmp(&vals[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let (lo, hi, second) = (order[0], order[n], order[n - 1]);
            let spread = vals[hi] - vals[lo];
            if vals[lo].is_finite()
                && vals[hi].is_finite()
                && spread <= self.tolerance(vals[lo], vals[hi])
            {
                return (pts[lo].clone(), vals[lo], true);
            }
            if obj.evals >= self.max_evals {
                return (pts[lo].clone(), vals[lo], false);
            }

            let mut centroid = vec![T::zero(); n];
            for &i in &order[..n] {
                for (c, &p) in centroid.iter_mut().zip(&pts[i]) {
                    *c = *c + p;
                }
            }
            for c in &mut centroid {
                *c = *c / nf;
            }
            let toward = |scale: T, from: &[T]| -> Vec<T> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(&c, &w)| c + scale * (c - w))
                    .collect()
            };

            let xr = toward(reflect, &pts[hi]);
            let fr = obj.call(&xr);
            if fr < vals[lo] {
                let xe = toward(expand, &pts[hi]);
                let fe = obj.call(&xe);
                if fe < fr {
                    pts[hi] = xe;
                    vals[hi] = fe;
                } else {
                    pts[hi] = xr;
                    vals[hi] = fr;
                }
                continue;
            }
            if fr < vals[second] {
                pts[hi] = xr;
                vals[hi] = fr;
                continue;
            }
            let (xc, fc, accept) = if fr < vals[hi] {
                let xc = toward(contract, &pts[hi]);
                let fc = obj.call(&xc);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = toward(-contract, &pts[hi]);
                let fc = obj.call(&xc);
                let ok = fc < vals[hi];
                (xc, fc, ok)
            };
            if accept {
                pts[hi] = xc;
                vals[hi] = fc;
                continue;
            }
            let best = pts[lo].clone();
            for &i in &order[1..] {
                let p: Vec<T> = best
                    .iter()
                    .zip(&pts[i])
                    .map(|(&b, &x)| b + shrink * (x - b))
                    .collect();
                vals[i] = obj.call(&p);
                pts[i] = p;
            }
        }
    }
}

/// Map an unconstrained value into `(lo, hi)` via the logistic function.
#[inline]
pub fn bounded<T: Scalar>(u: T, lo: T, hi: T) -> T {
    lo + (hi - lo) / (T::one() + (-u).exp())
}

/// Inverse of [`bounded`]; `x` is clipped slightly inside the interval.
#[inline]
pub fn unbounded<T: Scalar>(x: T, lo: T, hi: T) -> T {
    let eps = T::lit(1e-6);
    let p = ((x - lo) / (hi - lo)).max(eps).min(T::one() - eps);
    (p / (T::one() - p)).ln()
}
