use nalgebra::{Matrix4, Vector3};
use num_complex::Complex64;

pub type DiracMatrix = Matrix4<Complex64>;
pub type Momentum = Vector3<f64>;

/// Choice of the 4x4 Dirac matrices. All scalar outputs of the crate are
/// independent of this choice; the standard representation is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiracRepresentation {
    #[default]
    Standard,
    Chiral,
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl DiracRepresentation {
    /// The generators (alpha_1, alpha_2, alpha_3, beta).
    pub fn generators(self) -> [DiracMatrix; 4] {
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let m = c(-1.0, 0.0);
        let i = c(0.0, 1.0);
        let mi = c(0.0, -1.0);
        match self {
            DiracRepresentation::Standard => [
                DiracMatrix::new(o, o, o, l, o, o, l, o, o, l, o, o, l, o, o, o),
                DiracMatrix::new(o, o, o, mi, o, o, i, o, o, mi, o, o, i, o, o, o),
                DiracMatrix::new(o, o, l, o, o, o, o, m, l, o, o, o, o, m, o, o),
                DiracMatrix::new(l, o, o, o, o, l, o, o, o, o, m, o, o, o, o, m),
            ],
            DiracRepresentation::Chiral => [
                DiracMatrix::new(o, m, o, o, m, o, o, o, o, o, o, l, o, o, l, o),
                DiracMatrix::new(o, i, o, o, mi, o, o, o, o, o, o, mi, o, o, i, o),
                DiracMatrix::new(m, o, o, o, o, l, o, o, o, o, l, o, o, o, o, m),
                DiracMatrix::new(o, o, l, o, o, o, o, l, l, o, o, o, o, l, o, o),
            ],
        }
    }
}

/// E(p) = sqrt(1 + |p|^2).
pub fn energy(p: f64) -> f64 {
    (1.0 + p * p).sqrt()
}

/// Free Dirac symbol alpha.p + beta in the standard representation.
pub fn dirac_symbol(p: &Momentum) -> DiracMatrix {
    dirac_symbol_in(DiracRepresentation::Standard, p)
}

pub fn dirac_symbol_in(rep: DiracRepresentation, p: &Momentum) -> DiracMatrix {
    let [a1, a2, a3, b] = rep.generators();
    a1 * c(p.x, 0.0) + a2 * c(p.y, 0.0) + a3 * c(p.z, 0.0) + b
}

/// Projectors (P+, P-) onto the positive and negative spectral subspaces of the free symbol.
pub fn spectral_projectors(p: &Momentum) -> (DiracMatrix, DiracMatrix) {
    spectral_projectors_in(DiracRepresentation::Standard, p)
}

pub fn spectral_projectors_in(rep: DiracRepresentation, p: &Momentum) -> (DiracMatrix, DiracMatrix) {
    let d = dirac_symbol_in(rep, p) * c(1.0 / energy(p.norm()), 0.0);
    let id = DiracMatrix::identity();
    let half = c(0.5, 0.0);
    ((id + d) * half, (id - d) * half)
}

/// tr[P^s(p) P^s'(q)] in closed form: 1 + (p.q + 1)/(E(p)E(q)) for equal
/// signs, 1 - (p.q + 1)/(E(p)E(q)) otherwise.
pub fn projector_overlap_trace(p: &Momentum, q: &Momentum, same_sign: bool) -> f64 {
    let ratio = (p.dot(q) + 1.0) / (energy(p.norm()) * energy(q.norm()));
    if same_sign {
        1.0 + ratio
    } else {
        1.0 - ratio
    }
}
