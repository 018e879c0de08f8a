//! The coupled Marchenko equations
//!
//!   K₁(x,y) + λ∫ₓ^∞ K₂(x,z) H(z+y) dz = 0
//!   K₂(x,y) + H(x+y) + ∫ₓ^∞ K₁(x,z) H(z+y) dz = 0
//!
//! solved by Nyström discretisation on graded Gauss–Legendre panels over
//! [x, x + span], and the reconstruction q(x,t) = −2λK₂(x,x,t).

use nalgebra::{DMatrix, DVector, LU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::kernel::{KernelField, KernelTable};
use crate::quadrature::composite_gauss_legendre;
use crate::types::Lambda;

/// Default spacing of the kernel tables.
pub const TABLE_DS: f64 = 0.015;
/// Condition estimate above which the system is declared singular.
pub const SINGULAR_COND: f64 = 1e12;
/// Number of off-node points at which the continuous residual is checked.
const CHECK_POINTS: usize = 12;

/// Discretisation parameters of one Marchenko solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarchenkoOptions {
    /// Gauss–Legendre nodes per panel.
    pub nystrom_n: usize,
    /// Length of the truncated integration range [x, x + span].
    pub span: f64,
    /// Largest admissible continuous residual.
    pub tol_solve: f64,
}

impl MarchenkoOptions {
    /// Options for a kernel field: span = max(40/κ_min, 40) where κ_min is
    /// the slowest decay rate of the discrete terms.
    pub fn for_field(field: &KernelField, cfg: &ProblemConfig) -> Self {
        MarchenkoOptions {
            nystrom_n: cfg.grids.nystrom_n,
            span: default_span(field),
            tol_solve: cfg.tolerances.tol_solve,
        }
    }
}

/// max(40/κ_min, 40).
pub fn default_span(field: &KernelField) -> f64 {
    match field.min_decay_rate() {
        Some(kappa) if kappa > 0.0 => (40.0 / kappa).max(40.0),
        _ => 40.0,
    }
}

/// Panel breaks x + {0, 1, 2, 4, 8, …} up to x + span.
pub fn panel_breaks(x: f64, span: f64) -> Vec<f64> {
    let mut breaks = vec![x];
    let mut width = 1.0;
    let mut at = 0.0;
    while at < span {
        let next = (at + width).min(span);
        // Avoid a sliver of a last panel.
        let next = if span - next < 0.25 * width { span } else { next };
        breaks.push(x + next);
        at = next;
        if at > 1.0 {
            width *= 2.0;
        }
    }
    breaks
}

/// Solution of the discretised system at one (x, t).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarchenkoSolution {
    pub x: f64,
    pub t: f64,
    pub y_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub k1_values: Vec<f64>,
    pub k2_values: Vec<f64>,
    /// K₂(x, x) from the Nyström interpolant.
    pub k2_diagonal: f64,
    /// 1-norm condition estimate of the Nyström matrix.
    pub cond_estimate: f64,
    /// Largest residual of the continuous equations at off-node points.
    pub residual: f64,
    /// max(|K₁|, |K₂|) at the truncation edge y = x + span.
    pub edge_value: f64,
}

impl MarchenkoSolution {
    /// q(x, t) = −2λK₂(x, x, t).
    pub fn q(&self, lambda: Lambda) -> f64 {
        -2.0 * lambda.value() * self.k2_diagonal
    }
}

/// The Nyström interpolants K₁(y), K₂(y) for any y ≥ x.
fn interpolants(
    h: &dyn Fn(f64) -> f64,
    lambda: f64,
    x: f64,
    nodes: &[f64],
    weights: &[f64],
    k1: &[f64],
    k2: &[f64],
    y: f64,
) -> (f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for j in 0..nodes.len() {
        let hv = weights[j] * h(nodes[j] + y);
        s1 += hv * k2[j];
        s2 += hv * k1[j];
    }
    (-lambda * s1, -h(x + y) - s2)
}

/// Hager's estimate of ‖A⁻¹‖₁ from an LU factorisation PA = LU.
fn inverse_norm1_estimate(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = lu.u().nrows();
    let l = lu.l();
    let u = lu.u();
    let solve_t = |b: &DVector<f64>| -> Option<DVector<f64>> {
        // Aᵀ = Uᵀ Lᵀ P
        let y = u.tr_solve_upper_triangular(b)?;
        let mut z = l.tr_solve_lower_triangular(&y)?;
        lu.p().inv_permute_rows(&mut z);
        Some(z)
    };
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&v) else {
            return f64::INFINITY;
        };
        est = y.lp_norm(1);
        let xi = y.map(|e| if e >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = solve_t(&xi) else {
            return f64::INFINITY;
        };
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (j, e)| if e.abs() > acc.1 { (j, e.abs()) } else { acc });
        if zmax <= z.dot(&v) {
            break;
        }
        v = DVector::zeros(n);
        v[jmax] = 1.0;
    }
    est
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// Solve the Marchenko system at (x, t) for a kernel s ↦ H(s, t).
pub fn solve_marchenko_with(
    h: &dyn Fn(f64) -> f64,
    lambda: Lambda,
    x: f64,
    t: f64,
    opts: &MarchenkoOptions,
) -> Result<MarchenkoSolution> {
    let lam = lambda.value();
    let breaks = panel_breaks(x, opts.span);
    let (nodes, weights) = composite_gauss_legendre(&breaks, opts.nystrom_n);
    let n = nodes.len();
    // Unknowns interleaved as [K₁(y₁), K₂(y₁), K₁(y₂), …].
    let mut a = DMatrix::<f64>::identity(2 * n, 2 * n);
    let mut b = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let hv = weights[j] * h(nodes[j] + nodes[i]);
            a[(2 * i, 2 * j + 1)] += lam * hv;
            a[(2 * i + 1, 2 * j)] += hv;
        }
        b[2 * i + 1] = -h(x + nodes[i]);
    }
    let anorm = norm1(&a);
    let lu = a.clone().lu();
    let singular = |cond| Error::SingularSystem { x, t, cond };
    let mut sol = lu.solve(&b).ok_or_else(|| singular(f64::INFINITY))?;
    // One step of iterative refinement.
    let resid = &b - &a * &sol;
    if let Some(d) = lu.solve(&resid) {
        sol += d;
    }
    let cond = anorm * inverse_norm1_estimate(&lu);
    if !cond.is_finite() || cond > SINGULAR_COND {
        return Err(singular(cond));
    }
    let k1: Vec<f64> = (0..n).map(|i| sol[2 * i]).collect();
    let k2: Vec<f64> = (0..n).map(|i| sol[2 * i + 1]).collect();
    let (_, k2_diagonal) = interpolants(h, lam, x, &nodes, &weights, &k1, &k2, x);
    let (e1, e2) = interpolants(h, lam, x, &nodes, &weights, &k1, &k2, x + opts.span);

    // Continuous residual at off-node check points with a finer quadrature.
    let (fine_nodes, fine_weights) = composite_gauss_legendre(&breaks, 2 * opts.nystrom_n);
    let fine: Vec<(f64, f64)> = fine_nodes
        .iter()
        .map(|&z| interpolants(h, lam, x, &nodes, &weights, &k1, &k2, z))
        .collect();
    let stride = ((n - 1) / CHECK_POINTS).max(1);
    let mut residual: f64 = 0.0;
    for i in (0..n - 1).step_by(stride) {
        let y = 0.5 * (nodes[i] + nodes[i + 1]);
        let (c1, c2) = interpolants(h, lam, x, &nodes, &weights, &k1, &k2, y);
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        for (m, &z) in fine_nodes.iter().enumerate() {
            let hv = fine_weights[m] * h(z + y);
            i1 += hv * fine[m].1;
            i2 += hv * fine[m].0;
        }
        let r1 = c1 + lam * i1;
        let r2 = c2 + h(x + y) + i2;
        residual = residual.max(r1.abs()).max(r2.abs());
    }

    Ok(MarchenkoSolution {
        x,
        t,
        y_nodes: nodes,
        weights,
        k1_values: k1,
        k2_values: k2,
        k2_diagonal,
        cond_estimate: cond,
        residual,
        edge_value: e1.abs().max(e2.abs()),
    })
}

fn check_residual(sol: &MarchenkoSolution, opts: &MarchenkoOptions) -> Result<()> {
    if sol.residual > opts.tol_solve {
        return Err(Error::GridTooCoarse(format!(
            "Marchenko residual {:.2e} at x = {}, t = {} exceeds tol_solve {:.1e}; increase nystrom_n",
            sol.residual, sol.x, sol.t, opts.tol_solve
        )));
    }
    Ok(())
}

/// Kernel table covering every argument needed for x ∈ [0, x_hi].
pub fn kernel_table(field: &KernelField, t: f64, x_hi: f64, opts: &MarchenkoOptions) -> Result<KernelTable> {
    field.table(t, 2.0 * (x_hi + opts.span), TABLE_DS)
}

/// Solve at one (x, t) from a kernel field.
pub fn solve_marchenko_at(x: f64, t: f64, field: &KernelField, opts: &MarchenkoOptions) -> Result<MarchenkoSolution> {
    let table = kernel_table(field, t, x, opts)?;
    let sol = solve_marchenko_with(&|s| table.eval(s), field.lambda, x, t, opts)?;
    check_residual(&sol, opts)?;
    Ok(sol)
}

/// q(x, t) = −2λK₂(x, x, t).
pub fn reconstruct_q(x: f64, t: f64, field: &KernelField, opts: &MarchenkoOptions) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    Ok(solve_marchenko_at(x, t, field, opts)?.q(field.lambda))
}

/// q on an (x, t) lattice with diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionGrid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// q[i][j] = q(x[j], t[i]).
    pub q: Vec<Vec<f64>>,
    pub max_cond: f64,
    pub max_residual: f64,
    pub max_edge_value: f64,
    /// Largest |Im H| seen while tabulating the kernel.
    pub max_kernel_imag: f64,
}

impl SolutionGrid {
    pub fn zero(x: Vec<f64>, t: Vec<f64>) -> Self {
        let q = vec![vec![0.0; x.len()]; t.len()];
        SolutionGrid {
            x,
            t,
            q,
            max_cond: 1.0,
            max_residual: 0.0,
            max_edge_value: 0.0,
            max_kernel_imag: 0.0,
        }
    }

    pub fn max_abs_diff(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut e: f64 = 0.0;
        for (i, &t) in self.t.iter().enumerate() {
            for (j, &x) in self.x.iter().enumerate() {
                e = e.max((self.q[i][j] - f(x, t)).abs());
            }
        }
        e
    }
}

/// Reconstruct q on the lattice xs × ts; one kernel table per t, the
/// x-points solved in parallel.
pub fn reconstruct_grid(field: &KernelField, xs: &[f64], ts: &[f64], opts: &MarchenkoOptions) -> Result<SolutionGrid> {
    let mut grid = SolutionGrid::zero(xs.to_vec(), ts.to_vec());
    if field.is_zero() {
        return Ok(grid);
    }
    let x_hi = xs.iter().copied().fold(0.0, f64::max);
    for (i, &t) in ts.iter().enumerate() {
        let table = kernel_table(field, t, x_hi, opts)?;
        grid.max_kernel_imag = grid.max_kernel_imag.max(table.max_imag);
        let sols: Vec<MarchenkoSolution> = xs
            .par_iter()
            .map(|&x| {
                let sol = solve_marchenko_with(&|s| table.eval(s), field.lambda, x, t, opts)?;
                check_residual(&sol, opts)?;
                Ok(sol)
            })
            .collect::<Result<_>>()?;
        for (j, sol) in sols.iter().enumerate() {
            grid.q[i][j] = sol.q(field.lambda);
            grid.max_cond = grid.max_cond.max(sol.cond_estimate);
            grid.max_residual = grid.max_residual.max(sol.residual);
            grid.max_edge_value = grid.max_edge_value.max(sol.edge_value);
        }
    }
    Ok(grid)
}

/// Closed-form K₂(x, x) for the rank-one kernel H(s) = A e^{−κs}.
pub fn rank_one_k2_diagonal(a: f64, kappa: f64, lambda: Lambda, x: f64) -> f64 {
    let e = a * (-2.0 * kappa * x).exp() / (2.0 * kappa);
    -a * (-2.0 * kappa * x).exp() / (1.0 - lambda.value() * e * e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::c;

    fn opts() -> MarchenkoOptions {
        MarchenkoOptions {
            nystrom_n: 16,
            span: 40.0,
            tol_solve: 1e-8,
        }
    }

    #[test]
    fn breaks_are_graded_and_cover_span() {
        let b = panel_breaks(2.0, 40.0);
        assert_eq!(b[0], 2.0);
        assert_eq!(*b.last().unwrap(), 42.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!((b[1] - b[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_kernel_gives_zero_solution() {
        let sol = solve_marchenko_with(&|_| 0.0, Lambda::Focusing, 0.5, 0.0, &opts()).unwrap();
        assert!(sol.k1_values.iter().chain(&sol.k2_values).all(|v| *v == 0.0));
        assert_eq!(sol.k2_diagonal, 0.0);
        assert!((sol.cond_estimate - 1.0).abs() < 1e-15);
        let field = KernelField::from_poles(Lambda::Focusing, vec![]);
        assert_eq!(reconstruct_q(1.0, 1.0, &field, &opts()).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_closed_form() {
        for lambda in [Lambda::Focusing, Lambda::Defocusing] {
            for &(a, kappa) in &[(-0.8, 0.5), (0.3, 1.2)] {
                let h = move |s: f64| a * (-kappa * s).exp();
                for &x in &[0.0, 0.7, 3.0] {
                    let sol = solve_marchenko_with(&h, lambda, x, 0.0, &opts()).unwrap();
                    let want = rank_one_k2_diagonal(a, kappa, lambda, x);
                    assert!((sol.k2_diagonal - want).abs() < 1e-8, "{lambda:?} a={a} x={x}");
                    assert!(sol.residual < 1e-10);
                }
            }
        }
    }

    #[test]
    fn born_term_for_small_kernels() {
        let eps = 1e-4;
        let h = |s: f64| eps * (-0.4 * s).exp() * (1.3 * s).cos();
        for &x in &[0.0, 1.0, 2.5] {
            let sol = solve_marchenko_with(&h, Lambda::Defocusing, x, 0.0, &opts()).unwrap();
            let born = -h(2.0 * x);
            assert!((sol.k2_diagonal - born).abs() < 1e-10, "x={x}");
            assert!((sol.k2_diagonal - born).abs() <= 10.0 * eps.powi(3));
        }
    }

    #[test]
    fn soliton_from_one_pole() {
        let kappa = 0.5;
        let m = c(-0.3, 0.0);
        let field = KernelField::from_poles(Lambda::Focusing, vec![(c(0.0, kappa), m)]);
        let delta = (m.norm() / (2.0 * kappa)).ln();
        let o = MarchenkoOptions {
            span: default_span(&field),
            ..opts()
        };
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 1.5).collect();
        let ts = [0.0, 1.0, 2.0];
        let grid = reconstruct_grid(&field, &xs, &ts, &o).unwrap();
        let exact = |x: f64, t: f64| 2.0 * kappa / (2.0 * kappa * (x - 4.0 * kappa * kappa * t) - delta).cosh();
        assert!(grid.max_abs_diff(exact) < 1e-8, "{}", grid.max_abs_diff(exact));
        assert!(grid.max_cond < 1e3);
    }

    #[test]
    fn condition_estimate_matches_exact() {
        let h = |s: f64| -0.9 * (-0.5 * s).exp();
        let sol = solve_marchenko_with(&h, Lambda::Focusing, 0.0, 0.0, &opts()).unwrap();
        // Rebuild and invert explicitly.
        let o = opts();
        let (nodes, w) = composite_gauss_legendre(&panel_breaks(0.0, o.span), o.nystrom_n);
        let n = nodes.len();
        let mut a = DMatrix::<f64>::identity(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let hv = w[j] * h(nodes[j] + nodes[i]);
                a[(2 * i, 2 * j + 1)] -= hv;
                a[(2 * i + 1, 2 * j)] += hv;
            }
        }
        let exact = norm1(&a) * norm1(&a.clone().try_inverse().unwrap());
        assert!(sol.cond_estimate <= exact * (1.0 + 1e-10));
        assert!(sol.cond_estimate >= 0.3 * exact);
    }
}
