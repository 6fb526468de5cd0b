use crate::scalar::Real;

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub g: [T; 3],
    pub h: [[T; 3]; 3],
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Self { v, g: [T::zero(); 3], h: [[T::zero(); 3]; 3] }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..3 {
                out.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        out
    }

    pub fn one_minus(&self) -> Self {
        let mut out = Self::constant(T::one() - self.v);
        for i in 0..3 {
            out.g[i] = -self.g[i];
            for j in 0..3 {
                out.h[i][j] = -self.h[i][j];
            }
        }
        out
    }

    /// `1 − (1 − a)(1 − b)`.
    pub fn or(&self, o: &Self) -> Self {
        self.one_minus().mul(&o.one_minus()).one_minus()
    }

    /// `f ∘ self` given `f, f', f''` at `self.v`.
    pub fn compose(&self, f: (T, T, T)) -> Self {
        let (f0, f1, f2) = f;
        let mut out = Self::constant(f0);
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
            for j in 0..3 {
                out.h[i][j] = f2 * self.g[i] * self.g[j] + f1 * self.h[i][j];
            }
        }
        out
    }

    /// Affine map `a x + b` of the value.
    pub fn affine(&self, a: T, b: T) -> Self {
        let mut out = Self::constant(a * self.v + b);
        for i in 0..3 {
            out.g[i] = a * self.g[i];
            for j in 0..3 {
                out.h[i][j] = a * self.h[i][j];
            }
        }
        out
    }

    /// `|x − c|`, undefined (zero derivatives) at `x = c`.
    pub fn distance(x: &[T; 3], c: &[T; 3]) -> Self {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let mut out = Self::constant(r);
        if r > T::zero() {
            for i in 0..3 {
                out.g[i] = d[i] / r;
            }
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { T::one() } else { T::zero() };
                    out.h[i][j] = (delta - out.g[i] * out.g[j]) / r;
                }
            }
        }
        out
    }

    /// `cos θ = x · ĉ / |x|` for a unit axis `ĉ`; zero derivatives at the origin.
    pub fn cos_angle(x: &[T; 3], axis: &[T; 3]) -> Self {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == T::zero() {
            return Self::constant(T::one());
        }
        let xh = [x[0] / r, x[1] / r, x[2] / r];
        let q = xh[0] * axis[0] + xh[1] * axis[1] + xh[2] * axis[2];
        let mut out = Self::constant(q);
        let three = T::lit(3.0);
        let r2 = r * r;
        for i in 0..3 {
            out.g[i] = (axis[i] - q * xh[i]) / r;
            for j in 0..3 {
                let delta = if i == j { T::one() } else { T::zero() };
                out.h[i][j] = (-axis[i] * xh[j] - axis[j] * xh[i] - q * delta
                    + three * q * xh[i] * xh[j])
                    / r2;
            }
        }
        out
    }

    pub fn grad_norm(&self) -> T {
        (self.g[0] * self.g[0] + self.g[1] * self.g[1] + self.g[2] * self.g[2]).sqrt()
    }

    pub fn max_abs_grad(&self) -> T {
        self.g.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_hessian(&self) -> T {
        self.h.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn laplacian(&self) -> T {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(&[f64; 3]) -> Jet<f64>, x: [f64; 3]) {
        let j = f(&x);
        let e = 1e-5;
        for i in 0..3 {
            let mut p = x;
            let mut m = x;
            p[i] += e;
            m[i] -= e;
            let (jp, jm) = (f(&p), f(&m));
            let d = (jp.v - jm.v) / (2.0 * e);
            assert!((d - j.g[i]).abs() < 1e-7, "grad {i}: {d} vs {}", j.g[i]);
            for k in 0..3 {
                let dh = (jp.g[k] - jm.g[k]) / (2.0 * e);
                assert!((dh - j.h[i][k]).abs() < 1e-6, "hess {i}{k}: {dh} vs {}", j.h[i][k]);
            }
        }
    }

    #[test]
    fn distance_and_angle_derivatives() {
        let c = [0.3, -0.2, 0.5];
        fd_check(|x| Jet::distance(x, &c), [1.0, 0.4, -0.7]);
        let n = (0.1f64 * 0.1 + 0.7 * 0.7 + 0.2 * 0.2).sqrt();
        let axis = [0.1 / n, 0.7 / n, -0.2 / n];
        fd_check(|x| Jet::cos_angle(x, &axis), [0.6, 0.9, -0.3]);
    }

    #[test]
    fn algebra_matches_finite_differences() {
        let c = [0.3, -0.2, 0.5];
        let axis = [0.0, 0.0, 1.0];
        let f = |x: &[f64; 3]| {
            let a = Jet::distance(x, &c).compose((0.0, 0.0, 0.0));
            let d = Jet::distance(x, &c);
            let s = d.compose((d.v.sin(), d.v.cos(), -d.v.sin()));
            let q = Jet::cos_angle(x, &axis).affine(0.5, 0.25);
            s.mul(&q).or(&a.one_minus().mul(&q))
        };
        fd_check(f, [0.8, -0.6, 0.1]);
    }
}
