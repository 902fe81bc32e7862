//! Symbols of `D^2` for the Robertson-Walker metric `dt^2 + a(t)^2 dsigma^2`
//! in Hopf coordinates `(t, eta, phi1, phi2)` and spherical coordinates
//! `(t, chi, theta, phi)`.
//!
//! Both metrics are diagonal, so `p2 = sum_k g^kk xi_k^2` is stored as the
//! diagonal `g^kk`, and `p1 = sum_k P_k xi_k` as the four coefficient
//! expressions `P_k`. The tables are transcriptions of the known closed
//! forms; [`DiracSymbol`] gives the first-order symbol they come from, so
//! tests can recompose `D o D` and compare.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::expr::build::{q, qi, sum, term};
use crate::expr::{AnglePoint, SymExpr};
use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Coords {
    Hopf,
    Spherical,
}

impl Coords {
    pub fn name(self) -> &'static str {
        match self {
            Coords::Hopf => "hopf",
            Coords::Spherical => "spherical",
        }
    }

    pub fn symbols(self) -> SymbolTable {
        match self {
            Coords::Hopf => hopf_symbols(),
            Coords::Spherical => spherical_symbols(),
        }
    }
}

impl std::str::FromStr for Coords {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "hopf" => Ok(Coords::Hopf),
            "spherical" => Ok(Coords::Spherical),
            other => Err(crate::error::Error::Parse(format!("unknown coordinate system {other:?}"))),
        }
    }
}

/// How a coordinate enters the symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoordKind {
    /// `t`: differentiated through the jet chain rule.
    Time,
    /// Angular variable with the given generator-pair index.
    Angle(usize),
    /// Nothing depends on it.
    Cyclic,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolTable {
    pub coords: Coords,
    pub coord_names: [&'static str; 4],
    /// LaTeX names of the angular variables, by generator-pair index.
    pub angle_names: Vec<&'static str>,
    pub kinds: [CoordKind; 4],
    pub g_inv_diag: [SymExpr; 4],
    /// `P_k = d p1 / d xi_k`.
    pub p1_linear: [SymExpr; 4],
    pub p0: SymExpr,
    /// `sqrt(det g)` including the `a^3` factor.
    pub volume_density: SymExpr,
    pub depends_on: [bool; 4],
    /// Integral of the angular part of `sqrt(det g)`, as `coefficient * pi^power`.
    pub angular_volume: (Rational, i32),
}

impl SymbolTable {
    /// `d/dx_k` of an expression.
    pub fn d_coord(&self, k: usize, x: &SymExpr) -> SymExpr {
        match self.kinds[k] {
            CoordKind::Time => x.d_dt(),
            CoordKind::Angle(v) => x.d_angle(v),
            CoordKind::Cyclic => SymExpr::zero(),
        }
    }

    /// Coordinates the symbols actually depend on.
    pub fn active_coords(&self) -> impl Iterator<Item = usize> + '_ {
        (0..4).filter(|&k| self.depends_on[k])
    }

    /// SHA-256 over the canonical serialization of the symbols.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canon<'a> {
            coords: Coords,
            g: &'a [SymExpr; 4],
            p1: &'a [SymExpr; 4],
            p0: &'a SymExpr,
            vol: &'a SymExpr,
        }
        let canon = Canon {
            coords: self.coords,
            g: &self.g_inv_diag,
            p1: &self.p1_linear,
            p0: &self.p0,
            vol: &self.volume_density,
        };
        let bytes = serde_json::to_vec(&canon).expect("symbol tables serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The two exact evaluation points, each living in a single quadratic field.
    pub fn eval_points(&self) -> [AnglePoint; 2] {
        let mk = |d, v| AnglePoint::new(d, v).expect("points lie on the unit circle");
        match self.coords {
            Coords::Hopf => [mk(2, vec![AnglePoint::quarter_pi()]), mk(3, vec![AnglePoint::third_pi()])],
            Coords::Spherical => [
                mk(2, vec![AnglePoint::quarter_pi(), AnglePoint::quarter_pi()]),
                mk(3, vec![AnglePoint::third_pi(), AnglePoint::sixth_pi()]),
            ],
        }
    }
}

/// First-order symbol `sigma_D = sum_k L_k xi_k + constant`.
#[derive(Clone, Debug)]
pub struct DiracSymbol {
    pub linear: [SymExpr; 4],
    pub constant: SymExpr,
}

// angle slot layout: Hopf uses [sin eta, cos eta, -, -];
// spherical uses [sin chi, cos chi, sin theta, cos theta].

/// Symbols in Hopf coordinates. Every `tan`, `cot`, `sec`, `csc` and
/// `cot(2 eta) = (cos/sin - sin/cos)/2` is written as Laurent monomials.
pub fn hopf_symbols() -> SymbolTable {
    let none = [0; 4];
    let g_inv_diag = [
        SymExpr::one(),
        term(q(1, 1), &[], none, &[-2]),
        term(q(1, 1), &[], [-2, 0, 0, 0], &[-2]),
        term(q(1, 1), &[], [0, -2, 0, 0], &[-2]),
    ];
    let p1_linear = [
        // -3 i a'/a
        term(qi(-3, 1), &[], none, &[-1, 1]),
        // (-i a' g12 - 2 i cot 2eta)/a^2
        sum(&[
            term(qi(-1, 1), &[1, 2], none, &[-2, 1]),
            term(qi(-1, 1), &[], [-1, 1, 0, 0], &[-2]),
            term(qi(1, 1), &[], [1, -1, 0, 0], &[-2]),
        ]),
        // -(i a' csc g13 + i cot csc g23)/a^2
        sum(&[
            term(qi(-1, 1), &[1, 3], [-1, 0, 0, 0], &[-2, 1]),
            term(qi(-1, 1), &[2, 3], [-2, 1, 0, 0], &[-2]),
        ]),
        // (i tan sec g24 - i a' sec g14)/a^2
        sum(&[
            term(qi(1, 1), &[2, 4], [1, -2, 0, 0], &[-2]),
            term(qi(-1, 1), &[1, 4], [0, -1, 0, 0], &[-2, 1]),
        ]),
    ];
    // (1/(4a^2)) (-6 a a'' - 3 a'^2 + csc^2 + sec^2 + 4 - 2 a' (cot - tan) g12)
    // The g12 sign is the one D o D produces from the Dirac symbol below; the
    // opposite sign is sometimes quoted and breaks eta-independence.
    let p0 = sum(&[
        term(q(-3, 2), &[], none, &[-1, 0, 1]),
        term(q(-3, 4), &[], none, &[-2, 2]),
        term(q(1, 4), &[], [-2, 0, 0, 0], &[-2]),
        term(q(1, 4), &[], [0, -2, 0, 0], &[-2]),
        term(q(1, 1), &[], none, &[-2]),
        term(q(-1, 2), &[1, 2], [-1, 1, 0, 0], &[-2, 1]),
        term(q(1, 2), &[1, 2], [1, -1, 0, 0], &[-2, 1]),
    ]);
    SymbolTable {
        coords: Coords::Hopf,
        coord_names: ["t", "eta", "phi1", "phi2"],
        angle_names: vec!["\\eta"],
        kinds: [CoordKind::Time, CoordKind::Angle(0), CoordKind::Cyclic, CoordKind::Cyclic],
        g_inv_diag,
        p1_linear,
        p0,
        volume_density: term(q(1, 1), &[], [1, 1, 0, 0], &[3]),
        depends_on: [true, true, false, false],
        // (2 pi)^2 * int_0^{pi/2} sin cos = 2 pi^2
        angular_volume: (Rational::integer(2), 2),
    }
}

/// Hopf Dirac symbol: `i xi1 g1 + i xi2 g2/a + i xi3 g3/(a sin) + i xi4 g4/(a cos)
/// + 3a'/(2a) g1 + cot(2 eta)/a g2`.
pub fn hopf_dirac_symbol() -> DiracSymbol {
    let none = [0; 4];
    DiracSymbol {
        linear: [
            term(qi(1, 1), &[1], none, &[]),
            term(qi(1, 1), &[2], none, &[-1]),
            term(qi(1, 1), &[3], [-1, 0, 0, 0], &[-1]),
            term(qi(1, 1), &[4], [0, -1, 0, 0], &[-1]),
        ],
        constant: sum(&[
            term(q(3, 2), &[1], none, &[-1, 1]),
            term(q(1, 2), &[2], [-1, 1, 0, 0], &[-1]),
            term(q(-1, 2), &[2], [1, -1, 0, 0], &[-1]),
        ]),
    }
}

/// Symbols in spherical coordinates `(t, chi, theta, phi)`.
///
/// `p0` keeps a pair of imaginary terms that cancel identically; they are
/// transcribed as printed and vanish on canonicalization.
pub fn spherical_symbols() -> SymbolTable {
    let none = [0; 4];
    let g_inv_diag = [
        SymExpr::one(),
        term(q(1, 1), &[], none, &[-2]),
        term(q(1, 1), &[], [-2, 0, 0, 0], &[-2]),
        term(q(1, 1), &[], [-2, 0, -2, 0], &[-2]),
    ];
    let p1_linear = [
        term(qi(-3, 1), &[], none, &[-1, 1]),
        // -(i/a^2)(g12 a' + 2 cot chi)
        sum(&[
            term(qi(-1, 1), &[1, 2], none, &[-2, 1]),
            term(qi(-2, 1), &[], [-1, 1, 0, 0], &[-2]),
        ]),
        // -(i/a^2)(g13 csc chi a' + cot theta csc^2 chi + g23 cot chi csc chi)
        sum(&[
            term(qi(-1, 1), &[1, 3], [-1, 0, 0, 0], &[-2, 1]),
            term(qi(-1, 1), &[], [-2, 0, -1, 1], &[-2]),
            term(qi(-1, 1), &[2, 3], [-2, 1, 0, 0], &[-2]),
        ]),
        // -(i/a^2)(csc theta csc chi a' g14 + cot theta csc theta csc^2 chi g34
        //          + csc theta cot chi csc chi g24)
        sum(&[
            term(qi(-1, 1), &[1, 4], [-1, 0, -1, 0], &[-2, 1]),
            term(qi(-1, 1), &[3, 4], [-2, 0, -2, 1], &[-2]),
            term(qi(-1, 1), &[2, 4], [-2, 1, -1, 0], &[-2]),
        ]),
    ];
    // (1/(8a^2)) (-12 a a'' - 6 a'^2 + 3 csc^2 th csc^2 ch - cot^2 th csc^2 ch
    //   + 4i cot th cot ch csc ch - 4i cot th cot ch csc ch - 4 cot^2 ch + 5 csc^2 ch + 4)
    //   - cot th csc ch a'/(2a^2) g13 - cot ch a'/a^2 g12 - cot th cot ch csc ch/(2a^2) g23
    let p0 = sum(&[
        term(q(-3, 2), &[], none, &[-1, 0, 1]),
        term(q(-3, 4), &[], none, &[-2, 2]),
        term(q(3, 8), &[], [-2, 0, -2, 0], &[-2]),
        term(q(-1, 8), &[], [-2, 0, -2, 2], &[-2]),
        term(qi(1, 2), &[], [-2, 1, -1, 1], &[-2]),
        term(qi(-1, 2), &[], [-2, 1, -1, 1], &[-2]),
        term(q(-1, 2), &[], [-2, 2, 0, 0], &[-2]),
        term(q(5, 8), &[], [-2, 0, 0, 0], &[-2]),
        term(q(1, 2), &[], none, &[-2]),
        term(q(-1, 2), &[1, 3], [-1, 0, -1, 1], &[-2, 1]),
        term(q(-1, 1), &[1, 2], [-1, 1, 0, 0], &[-2, 1]),
        term(q(-1, 2), &[2, 3], [-2, 1, -1, 1], &[-2]),
    ]);
    SymbolTable {
        coords: Coords::Spherical,
        coord_names: ["t", "chi", "theta", "phi"],
        angle_names: vec!["\\chi", "\\theta"],
        kinds: [CoordKind::Time, CoordKind::Angle(0), CoordKind::Angle(1), CoordKind::Cyclic],
        g_inv_diag,
        p1_linear,
        p0,
        volume_density: term(q(1, 1), &[], [2, 0, 1, 0], &[3]),
        depends_on: [true, true, true, false],
        // 2 pi * int sin theta * int sin^2 chi = 2 pi * 2 * pi/2
        angular_volume: (Rational::integer(2), 2),
    }
}

/// Spherical Dirac symbol: `i g1 xi1 + i g2 xi2/a + i g3 xi3/(a sin chi)
/// + i g4 xi4/(a sin chi sin theta) + 3a'/(2a) g1 + cot chi/a g2
/// + cot theta/(2 a sin chi) g3`.
pub fn spherical_dirac_symbol() -> DiracSymbol {
    let none = [0; 4];
    DiracSymbol {
        linear: [
            term(qi(1, 1), &[1], none, &[]),
            term(qi(1, 1), &[2], none, &[-1]),
            term(qi(1, 1), &[3], [-1, 0, 0, 0], &[-1]),
            term(qi(1, 1), &[4], [-1, 0, -1, 0], &[-1]),
        ],
        constant: sum(&[
            term(q(3, 2), &[1], none, &[-1, 1]),
            term(q(1, 1), &[2], [-1, 1, 0, 0], &[-1]),
            term(q(1, 2), &[3], [-1, 0, -1, 1], &[-1]),
        ]),
    }
}

pub fn dirac_symbol(coords: Coords) -> DiracSymbol {
    match coords {
        Coords::Hopf => hopf_dirac_symbol(),
        Coords::Spherical => spherical_dirac_symbol(),
    }
}
