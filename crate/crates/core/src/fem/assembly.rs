//! Assembly of the mass, stiffness, `a_α`, divergence and convection forms.
//!
//! The convection form is the skew-symmetrized trilinear form
//! `c(u, v, w) = ½[b(u, v, w) − b(u, w, v)]`, `b(u, v, w) = ∫ (u·∇v)·w`,
//! so `c(u, v, v) = 0` for every pair of discrete functions.

use std::sync::Arc;

use super::function::{velocity_at, FeFunction};
use super::space::{CellEval, MixedSpace};
use crate::error::{Error, Result};
use crate::field::{Mat3, ScalarField, Vec3, VectorField};
use crate::quadrature::{gauss_interval, SimplexRule};
use crate::sparse::{Pattern, SparseOperator};

/// Which linearization of the convection term to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvectionMode {
    /// `wᵀ N(y) v = c(y, v, w)` (frozen convecting field).
    State,
    /// `wᵀ L(y) z = c(z, y, w) + c(y, z, w)`.
    StateJacobian,
    /// `L(y)ᵀ`: `wᵀ A λ = c(w, y, λ) + c(y, w, λ)`.
    Adjoint,
}

fn for_each_cell(space: &MixedSpace, rule: &SimplexRule, mut f: impl FnMut(usize, &CellEval)) {
    let mut ce = CellEval::default();
    for k in 0..space.mesh().n_cells() {
        space.eval_cell(k, rule, &mut ce);
        f(k, &ce);
    }
}

fn assemble_velocity_form(
    space: &MixedSpace,
    mut local: impl FnMut(usize, &CellEval, &mut [f64]),
) -> SparseOperator {
    let nld = space.nloc() * space.dim();
    let mut op = SparseOperator::zeros(space.vel_pattern().clone());
    let mut buf = vec![0.0; nld * nld];
    for_each_cell(space, space.rule(), |k, ce| {
        buf.iter_mut().for_each(|v| *v = 0.0);
        local(k, ce, &mut buf);
        let vals = op.values_mut();
        for (&p, &v) in space.vel_positions(k).iter().zip(&buf) {
            vals[p] += v;
        }
    });
    op
}

/// `(u, v) = ∫ u·v` on the full (unconstrained) velocity space.
pub fn assemble_mass(space: &MixedSpace) -> SparseOperator {
    let dim = space.dim();
    let nloc = space.nloc();
    let nld = nloc * dim;
    assemble_velocity_form(space, |_, ce, m| {
        for q in 0..ce.nq {
            let w = ce.weights[q];
            for i in 0..nloc {
                let wi = w * ce.phi(q, i);
                for l in 0..nloc {
                    let v = wi * ce.phi(q, l);
                    for j in 0..dim {
                        m[(i * dim + j) * nld + l * dim + j] += v;
                    }
                }
            }
        }
    })
}

/// `a(u, v) = Σ ∫ ∂_i u_j ∂_i v_j`.
pub fn assemble_stiffness(space: &MixedSpace) -> SparseOperator {
    let dim = space.dim();
    let nloc = space.nloc();
    let nld = nloc * dim;
    assemble_velocity_form(space, |_, ce, m| {
        for q in 0..ce.nq {
            let w = ce.weights[q];
            for i in 0..nloc {
                let gi = ce.dphi(q, i);
                for l in 0..nloc {
                    let gl = ce.dphi(q, l);
                    let v = w * (gi[0] * gl[0] + gi[1] * gl[1] + gi[2] * gl[2]);
                    for j in 0..dim {
                        m[(i * dim + j) * nld + l * dim + j] += v;
                    }
                }
            }
        }
    })
}

/// `a_α(u, v) = (u, v) + α² a(u, v)`; `α = 0` is rejected.
pub fn assemble_a_alpha(space: &MixedSpace, alpha: f64) -> Result<SparseOperator> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::invalid("the Voigt length scale alpha must be nonzero"));
    }
    let mut m = assemble_mass(space);
    m.axpy(alpha * alpha, &assemble_stiffness(space));
    Ok(m)
}

/// `B[q, z] = ∫ q div z` (rows: P1 pressure dofs, columns: velocity dofs).
pub fn assemble_div(space: &MixedSpace) -> SparseOperator {
    let dim = space.dim();
    let nloc = space.nloc();
    let mut op = SparseOperator::zeros(space.div_pattern().clone());
    let mut buf = vec![0.0; (dim + 1) * nloc * dim];
    for_each_cell(space, space.rule(), |k, ce| {
        buf.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..ce.nq {
            let w = ce.weights[q];
            for p in 0..=dim {
                let wp = w * ce.psi(q, p);
                for b in 0..nloc {
                    let g = ce.dphi(q, b);
                    for kk in 0..dim {
                        buf[(p * nloc + b) * dim + kk] += wp * g[kk];
                    }
                }
            }
        }
        let vals = op.values_mut();
        for (&pos, &v) in space.div_positions(k).iter().zip(&buf) {
            vals[pos] += v;
        }
    });
    op
}

/// P1 pressure mass matrix.
pub fn assemble_pressure_mass(space: &MixedSpace) -> SparseOperator {
    let mesh = space.mesh();
    let dim = space.dim();
    let mut rows = vec![Vec::new(); mesh.n_vertices()];
    for c in mesh.cells() {
        for &a in c {
            rows[a].extend_from_slice(c);
        }
    }
    let mut op = SparseOperator::zeros(Arc::new(Pattern::from_rows(mesh.n_vertices(), rows)));
    // exact P1 mass: |K| (1 + δ_ij) / ((d + 1)(d + 2))
    let denom = ((dim + 1) * (dim + 2)) as f64;
    for (k, c) in mesh.cells().enumerate() {
        let vol = mesh.cell_volume(k);
        for &a in c {
            for &b in c {
                let f = if a == b { 2.0 } else { 1.0 };
                op.add(a, b, vol * f / denom);
            }
        }
    }
    op
}

/// `c(u, v, w)` for the velocity components of three functions.
pub fn apply_trilinear(u: &FeFunction, v: &FeFunction, w: &FeFunction) -> Result<f64> {
    u.check_same_space(v)?;
    u.check_same_space(w)?;
    Ok(trilinear(u.space(), &u.velocity, &v.velocity, &w.velocity))
}

pub(crate) fn trilinear(space: &MixedSpace, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let dim = space.dim();
    let (mut uv, mut ug) = (Vec::new(), Vec::new());
    let (mut vv, mut vg) = (Vec::new(), Vec::new());
    let (mut wv, mut wg) = (Vec::new(), Vec::new());
    let mut total = 0.0;
    for_each_cell(space, space.rule(), |k, ce| {
        velocity_at(space, k, u, ce, &mut uv, &mut ug);
        velocity_at(space, k, v, ce, &mut vv, &mut vg);
        velocity_at(space, k, w, ce, &mut wv, &mut wg);
        for q in 0..ce.nq {
            let mut s = 0.0;
            for j in 0..dim {
                for i in 0..dim {
                    s += uv[q][i] * (vg[q][j][i] * wv[q][j] - wg[q][j][i] * vv[q][j]);
                }
            }
            total += 0.5 * ce.weights[q] * s;
        }
    });
    total
}

/// Convection operator linearized about `y` (see [`ConvectionMode`]).
pub fn assemble_convection(
    space: &Arc<MixedSpace>,
    y: &FeFunction,
    mode: ConvectionMode,
) -> Result<SparseOperator> {
    if !Arc::ptr_eq(space, y.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(convection(space, &y.velocity, mode))
}

pub(crate) fn convection(space: &MixedSpace, y: &[f64], mode: ConvectionMode) -> SparseOperator {
    let dim = space.dim();
    let nloc = space.nloc();
    let nld = nloc * dim;
    let (mut yv, mut yg) = (Vec::<Vec3>::new(), Vec::<Mat3>::new());
    let with_jac = mode != ConvectionMode::State;
    assemble_velocity_form(space, |k, ce, m| {
        velocity_at(space, k, y, ce, &mut yv, &mut yg);
        for q in 0..ce.nq {
            let w = 0.5 * ce.weights[q];
            let yq = &yv[q];
            let gq = &yg[q];
            for a in 0..nloc {
                let pa = ce.phi(q, a);
                let ga = ce.dphi(q, a);
                let y_ga: f64 = (0..dim).map(|i| yq[i] * ga[i]).sum();
                for b in 0..nloc {
                    let pb = ce.phi(q, b);
                    let gb = ce.dphi(q, b);
                    let y_gb: f64 = (0..dim).map(|i| yq[i] * gb[i]).sum();
                    let n = w * (y_gb * pa - y_ga * pb);
                    for j in 0..dim {
                        // test (a, j), trial (b, j)
                        let idx = local_index(mode, nld, dim, a, j, b, j);
                        m[idx] += n;
                        if with_jac {
                            for kk in 0..dim {
                                let c = w * pb * (gq[j][kk] * pa - ga[kk] * yq[j]);
                                m[local_index(mode, nld, dim, a, j, b, kk)] += c;
                            }
                        }
                    }
                }
            }
        }
    })
}

#[inline]
fn local_index(
    mode: ConvectionMode,
    nld: usize,
    dim: usize,
    a: usize,
    j: usize,
    b: usize,
    k: usize,
) -> usize {
    let (r, c) = (a * dim + j, b * dim + k);
    if mode == ConvectionMode::Adjoint {
        c * nld + r
    } else {
        r * nld + c
    }
}

/// `∫ f(·, t) · φ_i` for every velocity basis function.
pub fn load_vector(space: &MixedSpace, field: &dyn VectorField, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_vel()];
    add_load(space, field, t, 1.0, &mut out);
    out
}

pub(crate) fn add_load(
    space: &MixedSpace,
    field: &dyn VectorField,
    t: f64,
    scale: f64,
    out: &mut [f64],
) {
    let dim = space.dim();
    for_each_cell(space, space.rule(), |k, ce| {
        let nodes = space.cell_nodes(k);
        for q in 0..ce.nq {
            let f = field.value(&ce.points[q], t);
            let w = scale * ce.weights[q];
            for (i, &a) in nodes.iter().enumerate() {
                let wp = w * ce.phi(q, i);
                for j in 0..dim {
                    out[a * dim + j] += wp * f[j];
                }
            }
        }
    });
}

/// Interval average `(1/τ) ∫_{t0}^{t1} (f(t), φ_i) dt` with the 2-point
/// Gauss rule in time.
pub fn load_time_average(space: &MixedSpace, field: &dyn VectorField, t0: f64, t1: f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_vel()];
    let tau = t1 - t0;
    for (t, w) in gauss_interval(2, t0, t1) {
        add_load(space, field, t, w / tau, &mut out);
    }
    out
}

/// `∫ u_h · φ_i` for a cellwise-constant vector field (`values[k * dim + j]`).
pub fn load_cellwise(space: &MixedSpace, values: &[f64]) -> Vec<f64> {
    let dim = space.dim();
    let mesh = space.mesh();
    assert_eq!(values.len(), mesh.n_cells() * dim);
    let fractions = basis_integral_fractions(space);
    let mut out = vec![0.0; space.n_vel()];
    for k in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(k);
        for (i, &a) in space.cell_nodes(k).iter().enumerate() {
            for j in 0..dim {
                out[a * dim + j] += vol * fractions[i] * values[k * dim + j];
            }
        }
    }
    out
}

/// Adjoint of [`load_cellwise`]: `(1/|K|) ∫_K v_h` for each cell and component.
pub fn cell_averages(space: &MixedSpace, coeffs: &[f64]) -> Vec<f64> {
    let dim = space.dim();
    let mesh = space.mesh();
    let fractions = basis_integral_fractions(space);
    let mut out = vec![0.0; mesh.n_cells() * dim];
    for k in 0..mesh.n_cells() {
        for (i, &a) in space.cell_nodes(k).iter().enumerate() {
            for j in 0..dim {
                out[k * dim + j] += fractions[i] * coeffs[a * dim + j];
            }
        }
    }
    out
}

/// `(1/|K|) ∫_K φ_i` for the local P2 basis (cell independent).
fn basis_integral_fractions(space: &MixedSpace) -> Vec<f64> {
    let rule = space.rule();
    let dim = space.dim();
    let nloc = space.nloc();
    let mut f = vec![0.0; nloc];
    let edges = super::space::local_edges(dim);
    for (lam, w) in rule.points.iter().zip(&rule.weights) {
        for i in 0..=dim {
            f[i] += w * lam[i] * (2.0 * lam[i] - 1.0);
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            f[dim + 1 + e] += w * 4.0 * lam[a] * lam[b];
        }
    }
    f
}

/// `∫ p div φ_i` for a scalar callback `p`.
pub fn div_load(space: &MixedSpace, p: &dyn ScalarField, t: f64) -> Vec<f64> {
    let dim = space.dim();
    let mut out = vec![0.0; space.n_vel()];
    for_each_cell(space, space.rule(), |k, ce| {
        let nodes = space.cell_nodes(k);
        for q in 0..ce.nq {
            let w = ce.weights[q] * p.value(&ce.points[q], t);
            for (i, &a) in nodes.iter().enumerate() {
                let g = ce.dphi(q, i);
                for j in 0..dim {
                    out[a * dim + j] += w * g[j];
                }
            }
        }
    });
    out
}

/// `a_α(y, φ_i)` for an analytic field with gradient.
pub fn a_alpha_load(
    space: &MixedSpace,
    field: &dyn VectorField,
    t: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    let dim = space.dim();
    let a2 = alpha * alpha;
    let mut out = vec![0.0; space.n_vel()];
    let mut missing = false;
    for_each_cell(space, space.rule(), |k, ce| {
        if missing {
            return;
        }
        let nodes = space.cell_nodes(k);
        for q in 0..ce.nq {
            let x = &ce.points[q];
            let v = field.value(x, t);
            let Some(g) = field.gradient(x, t) else {
                missing = true;
                return;
            };
            let w = ce.weights[q];
            for (i, &a) in nodes.iter().enumerate() {
                let phi = ce.phi(q, i);
                let dphi = ce.dphi(q, i);
                for j in 0..dim {
                    let grad: f64 = (0..dim).map(|d| g[j][d] * dphi[d]).sum();
                    out[a * dim + j] += w * (v[j] * phi + a2 * grad);
                }
            }
        }
    });
    if missing {
        return Err(Error::invalid("field has no gradient; a_alpha pairing needs one"));
    }
    Ok(out)
}

/// Squared `L²` and `H¹`-seminorm distances between the velocity `coeffs`
/// and `field(·, t)`, integrated with `rule`.
pub fn velocity_error_sq(
    space: &MixedSpace,
    coeffs: &[f64],
    field: &dyn VectorField,
    t: f64,
    rule: &SimplexRule,
) -> Result<(f64, f64)> {
    let dim = space.dim();
    let (mut vv, mut vg) = (Vec::new(), Vec::new());
    let (mut l2, mut h1) = (0.0, 0.0);
    let mut missing = false;
    for_each_cell(space, rule, |k, ce| {
        if missing {
            return;
        }
        velocity_at(space, k, coeffs, ce, &mut vv, &mut vg);
        for q in 0..ce.nq {
            let x = &ce.points[q];
            let Some(g) = field.gradient(x, t) else {
                missing = true;
                return;
            };
            let f = field.value(x, t);
            let w = ce.weights[q];
            for j in 0..dim {
                l2 += w * (f[j] - vv[q][j]).powi(2);
                for d in 0..dim {
                    h1 += w * (g[j][d] - vg[q][j][d]).powi(2);
                }
            }
        }
    });
    if missing {
        return Err(Error::invalid("field has no gradient; H1 error needs one"));
    }
    Ok((l2, h1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, FnField};
    use crate::mesh::{BoxDomain, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_space(dim: usize, n: usize) -> Arc<MixedSpace> {
        let mesh = Mesh::build_structured(&BoxDomain::unit(dim), n).unwrap();
        MixedSpace::new(Arc::new(mesh))
    }

    fn reference_triangle() -> Arc<MixedSpace> {
        let verts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let mesh = Mesh::from_cells(2, verts, vec![0, 1, 2]).unwrap();
        MixedSpace::new(Arc::new(mesh))
    }

    fn random_coeffs(space: &MixedSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..space.n_vel()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn constant(space: &Arc<MixedSpace>, c: [f64; 3]) -> Vec<f64> {
        FeFunction::interpolate(space, &ConstantField(c), 0.0).velocity
    }

    // exact P2 products on the reference triangle (scaled by 360 and 6)
    const REF_MASS_360: [[f64; 6]; 6] = [
        [6.0, -1.0, -1.0, 0.0, -4.0, 0.0],
        [-1.0, 6.0, -1.0, 0.0, 0.0, -4.0],
        [-1.0, -1.0, 6.0, -4.0, 0.0, 0.0],
        [0.0, 0.0, -4.0, 32.0, 16.0, 16.0],
        [-4.0, 0.0, 0.0, 16.0, 32.0, 16.0],
        [0.0, -4.0, 0.0, 16.0, 16.0, 32.0],
    ];
    const REF_STIFF_6: [[f64; 6]; 6] = [
        [6.0, 1.0, 1.0, -4.0, 0.0, -4.0],
        [1.0, 3.0, 0.0, -4.0, 0.0, 0.0],
        [1.0, 0.0, 3.0, 0.0, 0.0, -4.0],
        [-4.0, -4.0, 0.0, 16.0, -8.0, 0.0],
        [0.0, 0.0, 0.0, -8.0, 16.0, -8.0],
        [-4.0, 0.0, -4.0, 0.0, -8.0, 16.0],
    ];

    #[test]
    fn reference_triangle_matches_symbolic_mass_and_stiffness() {
        let space = reference_triangle();
        let m = assemble_mass(&space);
        let k = assemble_stiffness(&space);
        for i in 0..6 {
            for l in 0..6 {
                for j in 0..2 {
                    assert!((m.get(2 * i + j, 2 * l + j) - REF_MASS_360[i][l] / 360.0).abs() < 1e-14);
                    assert!((k.get(2 * i + j, 2 * l + j) - REF_STIFF_6[i][l] / 6.0).abs() < 1e-14);
                }
                assert_eq!(m.get(2 * i, 2 * l + 1), 0.0);
            }
        }
    }

    #[test]
    fn mass_of_constant_field_is_area() {
        let space = unit_space(2, 3);
        let m = assemble_mass(&space);
        let c = constant(&space, [1.5, -2.0, 0.0]);
        assert!((m.bilinear(&c, &c) - 6.25).abs() < 1e-13);
        assert!(m.asymmetry() <= 1e-14);
    }

    #[test]
    fn stiffness_kernel_and_linear_field() {
        for dim in [2, 3] {
            let space = unit_space(dim, 2);
            let k = assemble_stiffness(&space);
            let c = constant(&space, [1.0, 2.0, 3.0]);
            assert!(k.mul_vec(&c).iter().all(|v| v.abs() < 1e-13));
            assert!(k.asymmetry() <= 1e-13 * k.max_abs());
        }
        let space = unit_space(2, 2);
        let k = assemble_stiffness(&space);
        let u = FeFunction::interpolate(&space, &FnField::new(|x, _| [x[0], 0.0, 0.0]), 0.0);
        assert!((k.bilinear(&u.velocity, &u.velocity) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn a_alpha_is_mass_plus_scaled_stiffness() {
        let space = unit_space(2, 2);
        assert!(assemble_a_alpha(&space, 0.0).is_err());
        let a = assemble_a_alpha(&space, 0.3).unwrap();
        let m = assemble_mass(&space);
        let k = assemble_stiffness(&space);
        for ((x, y), z) in a.values().iter().zip(m.values()).zip(k.values()) {
            assert!((x - (y + 0.09 * z)).abs() < 1e-14);
        }
        let a1 = assemble_a_alpha(&space, 1.0).unwrap();
        let c = constant(&space, [0.5, 2.0, 0.0]);
        assert!((a1.bilinear(&c, &c) - 4.25).abs() < 1e-13);
    }

    #[test]
    fn a_alpha_positive_on_constrained_dofs() {
        let space = unit_space(2, 2);
        let a = assemble_a_alpha(&space, 0.5).unwrap().to_dense();
        let free: Vec<usize> = (0..space.n_vel()).filter(|&i| !space.is_dirichlet(i)).collect();
        let sub = nalgebra::DMatrix::from_fn(free.len(), free.len(), |i, j| a[free[i]][free[j]]);
        let min = sub.symmetric_eigenvalues().min();
        assert!(min > 0.0, "{min}");
    }

    #[test]
    fn div_annihilates_p2_stream_function_fields() {
        let space = unit_space(2, 3);
        let b = assemble_div(&space);
        // stream function x^2 y + x y^2
        let u = FeFunction::interpolate(
            &space,
            &FnField::new(|x, _| {
                [x[0] * x[0] + 2.0 * x[0] * x[1], -2.0 * x[0] * x[1] - x[1] * x[1], 0.0]
            }),
            0.0,
        );
        assert!(b.mul_vec(&u.velocity).iter().all(|v| v.abs() < 1e-12));
        let lin = FeFunction::interpolate(&space, &FnField::new(|x, _| [x[0], 0.0, 0.0]), 0.0);
        let ones = vec![1.0; space.n_pre()];
        assert!((b.bilinear(&ones, &lin.velocity) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pressure_mass_integrates_constants() {
        let space = unit_space(3, 2);
        let mp = assemble_pressure_mass(&space);
        let ones = vec![1.0; space.n_pre()];
        assert!((mp.bilinear(&ones, &ones) - 1.0).abs() < 1e-13);
        let total: f64 = space.mean_vector().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trilinear_polynomial_oracles() {
        let space = unit_space(2, 2);
        let f = |g: fn(&crate::mesh::Point) -> Vec3| {
            FeFunction::interpolate(&space, &FnField::new(move |x, _| g(x)), 0.0)
        };
        let cases: [(fn(&crate::mesh::Point) -> Vec3, fn(&crate::mesh::Point) -> Vec3, fn(&crate::mesh::Point) -> Vec3, f64); 4] = [
            (|_| [1.0, 0.0, 0.0], |x| [x[0] * x[1], 0.0, 0.0], |x| [x[0], 0.0, 0.0], 0.0),
            (|_| [1.0, 0.0, 0.0], |x| [x[0] * x[1], 0.0, 0.0], |x| [x[0] * x[0], 0.0, 0.0], -1.0 / 12.0),
            (|x| [x[0], x[1], 0.0], |x| [x[0] * x[1], x[0], 0.0], |x| [x[1] * x[1], x[0] * x[0], 0.0], -1.0 / 8.0),
            (
                |x| [x[0] * x[1], 1.0 - x[0], 0.0],
                |x| [x[0] * x[0] - x[1], x[0] * x[1], 0.0],
                |x| [x[1] * x[1] + x[0], x[0] * x[0], 0.0],
                41.0 / 240.0,
            ),
        ];
        for (u, v, w, expected) in cases {
            let c = apply_trilinear(&f(u), &f(v), &f(w)).unwrap();
            assert!((c - expected).abs() < 1e-13, "{c} vs {expected}");
        }
    }

    #[test]
    fn trilinear_skew_identities_hold_for_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 3] {
            let space = unit_space(dim, 2);
            for _ in 0..5 {
                let u = random_coeffs(&space, &mut rng);
                let v = random_coeffs(&space, &mut rng);
                let w = random_coeffs(&space, &mut rng);
                let scale = trilinear(&space, &u, &v, &w).abs().max(1.0);
                assert!(trilinear(&space, &u, &v, &v).abs() < 1e-12 * scale);
                let s = trilinear(&space, &u, &v, &w) + trilinear(&space, &u, &w, &v);
                assert!(s.abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn convection_modes_match_trilinear_and_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = unit_space(2, 2);
        let y = random_coeffs(&space, &mut rng);
        let z = random_coeffs(&space, &mut rng);
        let w = random_coeffs(&space, &mut rng);
        let n = convection(&space, &y, ConvectionMode::State);
        let l = convection(&space, &y, ConvectionMode::StateJacobian);
        let adj = convection(&space, &y, ConvectionMode::Adjoint);
        let scale = l.max_abs();
        assert!((n.bilinear(&w, &z) - trilinear(&space, &y, &z, &w)).abs() < 1e-12 * scale);
        let expected = trilinear(&space, &z, &y, &w) + trilinear(&space, &y, &z, &w);
        assert!((l.bilinear(&w, &z) - expected).abs() < 1e-12 * scale.max(expected.abs()));
        let lt = l.transpose();
        for i in 0..space.n_vel() {
            for &j in l.pattern().row(i) {
                assert!((adj.get(i, j) - lt.get(i, j)).abs() < 1e-13 * scale);
            }
        }
        let zero = vec![0.0; space.n_vel()];
        for mode in [ConvectionMode::State, ConvectionMode::StateJacobian, ConvectionMode::Adjoint] {
            assert_eq!(convection(&space, &zero, mode).max_abs(), 0.0);
        }
    }

    #[test]
    fn convection_rejects_foreign_function() {
        let a = unit_space(2, 1);
        let b = unit_space(2, 1);
        let y = FeFunction::zero(&b);
        assert!(matches!(
            assemble_convection(&a, &y, ConvectionMode::State),
            Err(Error::SpaceMismatch)
        ));
        assert!(apply_trilinear(&FeFunction::zero(&a), &y, &y).is_err());
    }

    #[test]
    fn cellwise_load_and_averages_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            let space = unit_space(dim, 2);
            let nc = space.mesh().n_cells();
            let u: Vec<f64> = (0..nc * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = random_coeffs(&space, &mut rng);
            let lhs: f64 = load_cellwise(&space, &u).iter().zip(&v).map(|(a, b)| a * b).sum();
            let avg = cell_averages(&space, &v);
            let rhs: f64 = (0..nc * dim)
                .map(|i| u[i] * avg[i] * space.mesh().cell_volume(i / dim))
                .sum();
            assert!((lhs - rhs).abs() < 1e-13);
            let ones = constant(&space, [1.0; 3]);
            assert!(cell_averages(&space, &ones).iter().all(|a| (a - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn p2_interpolation_h1_rate() {
        let field = FnField::with_gradient(
            |x, _| [(3.0 * x[0]).sin() * x[1].exp(), (2.0 * x[1]).cos() * x[0], 0.0],
            |x, _| {
                [
                    [3.0 * (3.0 * x[0]).cos() * x[1].exp(), (3.0 * x[0]).sin() * x[1].exp(), 0.0],
                    [(2.0 * x[1]).cos(), -2.0 * (2.0 * x[1]).sin() * x[0], 0.0],
                    [0.0; 3],
                ]
            },
        );
        let rule = SimplexRule::collapsed(2, 6);
        let errs: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&n| {
                let space = unit_space(2, n);
                let u = FeFunction::interpolate(&space, &field, 0.0);
                let (l2, h1) = velocity_error_sq(&space, &u.velocity, &field, 0.0, &rule).unwrap();
                (l2 + h1).sqrt()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }
}
