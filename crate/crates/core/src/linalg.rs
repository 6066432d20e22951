//! Small linear-algebra kernels for the line solves: a banded LU with partial
//! pivoting and a bordered (one extra row and column) block solve.

use nalgebra::DMatrix;

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row stores columns `i - kl ..= i + kl + ku`; the extra `kl` slots hold
/// fill-in from row interchanges during factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off >= self.width as isize {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(
            j + self.kl >= i && j <= i + self.ku,
            "({i},{j}) outside band"
        );
        let s = i * self.width + (j + self.kl - i);
        self.data[s] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// In-place LU with partial pivoting. Returns `None` on an exactly zero
    /// or non-finite pivot.
    pub fn factor(mut self) -> Option<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku_fill = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return None;
            }
            piv[k] = p;
            let cmax = (k + ku_fill).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let a = self.slot(k, c).unwrap();
                    let b = self.slot(p, c).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k).unwrap()];
            for r in k + 1..=last {
                let sr = self.slot(r, k).unwrap();
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l != 0.0 {
                    for c in k + 1..=cmax {
                        let kc = self.data[self.slot(k, c).unwrap()];
                        if kc != 0.0 {
                            let rc = self.slot(r, c).unwrap();
                            self.data[rc] -= l * kc;
                        }
                    }
                }
            }
        }
        Some(BandLu { lu: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.lu.n;
        let kl = self.lu.kl;
        let ku_fill = self.lu.kl + self.lu.ku;
        // forward: apply P and unit-lower L
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for (r, br) in b.iter_mut().enumerate().take((k + kl).min(n - 1) + 1).skip(k + 1) {
                    *br -= self.lu.get(r, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + ku_fill).min(n - 1) {
                s -= self.lu.get(k, c) * b[c];
            }
            b[k] = s / self.lu.get(k, k);
        }
    }
}

/// Leading `n x n` block of a bordered Jacobian.
#[derive(Debug, Clone)]
pub enum Block {
    Banded(BandMatrix),
    Dense(DMatrix<f64>),
}

impl Block {
    pub fn n(&self) -> usize {
        match self {
            Block::Banded(b) => b.n(),
            Block::Dense(d) => d.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Block::Banded(b) => b.to_dense(),
            Block::Dense(d) => d.clone(),
        }
    }
}

/// Jacobian of a line system in unknowns `(φ_1..φ_n, ξ)`:
///
/// ```text
/// [ block  col    ]
/// [ row^T  corner ]
/// ```
#[derive(Debug, Clone)]
pub struct BorderedMatrix {
    pub block: Block,
    /// ∂(line residuals)/∂ξ.
    pub col: Vec<f64>,
    /// ∂(constraint)/∂φ.
    pub row: Vec<f64>,
    /// ∂(constraint)/∂ξ.
    pub corner: f64,
}

/// Solution of a bordered Newton system.
#[derive(Debug, Clone)]
pub struct BorderedStep {
    pub dphi: Vec<f64>,
    pub dxi: f64,
    /// The Schur complement vanished and ξ was held fixed for this step.
    pub xi_frozen: bool,
}

/// Relative size below which the Schur complement of the ξ border counts as zero.
pub const SCHUR_FLOOR: f64 = 1e-13;

impl BorderedMatrix {
    pub fn n(&self) -> usize {
        self.block.n()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.block.to_dense());
        for i in 0..n {
            m[(i, n)] = self.col[i];
            m[(n, i)] = self.row[i];
        }
        m[(n, n)] = self.corner;
        m
    }

    /// Solves `J [dφ; dξ] = −[g; h]` by block elimination through the
    /// Schur complement `s = corner − rowᵀ block⁻¹ col`.
    ///
    /// When `freeze_xi` is set, or `s` is zero relative to its terms, the
    /// constraint row carries no information about ξ; ξ is then held fixed
    /// and only the line block is solved.
    pub fn solve_newton(&self, g: &[f64], h: f64, freeze_xi: bool) -> Option<BorderedStep> {
        let n = self.n();
        let mut u: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut w = self.col.clone();
        match &self.block {
            Block::Banded(b) => {
                let lu = b.clone().factor()?;
                lu.solve_in_place(&mut u);
                lu.solve_in_place(&mut w);
            }
            Block::Dense(d) => {
                let lu = d.clone().lu();
                let mut rhs = DMatrix::zeros(n, 2);
                for i in 0..n {
                    rhs[(i, 0)] = u[i];
                    rhs[(i, 1)] = w[i];
                }
                let x = lu.solve(&rhs)?;
                for i in 0..n {
                    u[i] = x[(i, 0)];
                    w[i] = x[(i, 1)];
                }
            }
        }
        if u.iter().chain(&w).any(|v| !v.is_finite()) {
            return None;
        }
        let mut cw = 0.0;
        let mut cw_abs = 0.0;
        let mut cu = 0.0;
        for i in 0..n {
            cw += self.row[i] * w[i];
            cw_abs += (self.row[i] * w[i]).abs();
            cu += self.row[i] * u[i];
        }
        let s = self.corner - cw;
        let scale = self.corner.abs() + cw_abs;
        if freeze_xi || s == 0.0 || s.abs() <= SCHUR_FLOOR * scale {
            return Some(BorderedStep {
                dphi: u,
                dxi: 0.0,
                xi_frozen: true,
            });
        }
        let dxi = (-h - cu) / s;
        let dphi = u.iter().zip(&w).map(|(ui, wi)| ui - wi * dxi).collect();
        Some(BorderedStep {
            dphi,
            dxi,
            xi_frozen: false,
        })
    }
}
