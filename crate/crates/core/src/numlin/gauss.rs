//! Gaussian quadrature rules from the Golub–Welsch eigenvalue method.
//!
//! Every rule here is built from the three-term recurrence of its monic
//! orthogonal polynomials. The nodes are the eigenvalues of the symmetric
//! tridiagonal Jacobi matrix and the weights are the squared first
//! components of its normalized eigenvectors, scaled by the total mass of
//! the weight function. Only first components are tracked in the QL sweep,
//! so building an `n`-point rule costs `O(n²)`.

/// Nodes and weights of an interpolatory rule, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Eigen-decomposition of the Jacobi matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples `i` and `i+1`); returns a rule
/// whose weights sum to `mass`.
fn golub_welsch(mut diag: Vec<f64>, off: &[f64], mass: f64) -> Rule {
    let n = diag.len();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    tql_first_components(&mut diag, &mut e, &mut z);

    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| mass * p.1 / total).collect(),
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix,
/// rotating only the first row `z` of the eigenvector matrix.
fn tql_first_components(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 200, "tridiagonal QL failed to converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Gauss–Legendre rule on `[-1, 1]`; weights sum to 2.
pub fn gauss_legendre(n: usize) -> Rule {
    let off: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            i / (4.0 * i * i - 1.0).sqrt()
        })
        .collect();
    let mut rule = golub_welsch(vec![0.0; n], &off, 2.0);
    symmetrize(&mut rule);
    rule
}

/// Gauss–Hermite rule for the standard normal density; weights sum to 1,
/// so `integrate(f)` approximates `E[f(g)]` with `g ~ N(0, 1)`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let off: Vec<f64> = (1..n).map(|i| (i as f64).sqrt()).collect();
    let mut rule = golub_welsch(vec![0.0; n], &off, 1.0);
    symmetrize(&mut rule);
    rule
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `u^p (1-u)^q`, normalized
/// so the weights sum to 1: `integrate(f)` approximates `E[f(U)]` with
/// `U ~ Beta(p + 1, q + 1)`. Requires `p, q > -1`.
pub fn gauss_jacobi_beta(n: usize, p: f64, q: f64) -> Rule {
    assert!(p > -1.0 && q > -1.0, "Jacobi exponents must exceed -1");
    // Monic Jacobi recurrence on [-1, 1] for (1-t)^a (1+t)^b, u = (1+t)/2.
    let (a, b) = (q, p);
    let ab = a + b;
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let t = if i == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let s = 2.0 * i as f64 + ab;
                (b * b - a * a) / (s * (s + 2.0))
            };
            0.5 * (1.0 + t)
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            let s = 2.0 * i + ab;
            let beta = 4.0 * i * (i + a) * (i + b) * (i + ab) / (s * s * (s + 1.0) * (s - 1.0));
            0.5 * beta.sqrt()
        })
        .collect();
    golub_welsch(diag, &off, 1.0)
}

/// Enforces exact mirror symmetry for rules whose weight is even.
fn symmetrize(rule: &mut Rule) {
    let n = rule.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(10);
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(18)), 2.0 / 19.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(7)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_three_point_nodes() {
        let rule = gauss_legendre(3);
        assert_abs_diff_eq!(rule.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rule.weights[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn hermite_normal_moments() {
        let rule = gauss_hermite_normal(20);
        assert_abs_diff_eq!(rule.integrate(|x| x * x), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(4)), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(6)), 15.0, epsilon = 1e-11);
        // E[cos g] = e^{-1/2}
        assert_abs_diff_eq!(rule.integrate(f64::cos), (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn jacobi_beta_moments() {
        // E[U^j] for U ~ Beta(α, β) is Π_{i<j} (α+i)/(α+β+i)
        for &(p, q) in &[(-0.5, 0.0), (0.0, 3.5), (-0.5, 2046.0), (0.5, 100.0)] {
            let rule = gauss_jacobi_beta(32, p, q);
            let (al, be) = (p + 1.0, q + 1.0);
            let mut moment = 1.0;
            for j in 0..8 {
                let got = rule.integrate(|u| u.powi(j));
                assert!(
                    ((got - moment) / moment).abs() < 1e-11,
                    "p={p} q={q} j={j}: {got} vs {moment}"
                );
                let jf = j as f64;
                moment *= (al + jf) / (al + be + jf);
            }
            assert!(rule.nodes.iter().all(|&u| u > 0.0 && u < 1.0));
        }
    }
}
