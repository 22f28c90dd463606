//! Mixed equilibria on two parallel M/M/1 links.
//!
//! One group user with demand `r1` and cooperation degree `alpha` shares the
//! links with a population of infinitesimal users of total mass `r2` that
//! obeys the Wardrop conditions. The group minimizes
//! `(1 - alpha) J^group + alpha J^wardrop` where `J^wardrop` is the
//! aggregate cost of the population.
//!
//! A solution is written `(x, y)`: `x` is the group flow on link 1 and `y`
//! the Wardrop flow on link 2, so the link loads are `f1 = x + r2 - y` and
//! `f2 = r1 - x + y`.
//!
//! Three closed-form variants are offered because the published formulas
//! disagree with each other (see [`Variant`]). Every candidate, whichever
//! its source, is adjudicated by [`verify_mixed`], which checks the
//! equilibrium definition directly. [`mixed_numeric`] is an independent
//! oracle that does not use any of the closed forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::MixedError;
use crate::num::{bisect_increasing, linspace, scan_roots, share};

/// Parameters of a two-link mixed game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedScenario {
    pub c1: f64,
    pub c2: f64,
    /// Group demand.
    pub r1: f64,
    /// Wardrop mass.
    pub r2: f64,
    pub alpha: f64,
}

fn mm1(c: f64, f: f64) -> f64 {
    if f < c {
        1.0 / (c - f)
    } else {
        f64::INFINITY
    }
}

fn mm1_slope(c: f64, f: f64) -> f64 {
    if f < c {
        1.0 / ((c - f) * (c - f))
    } else {
        f64::INFINITY
    }
}

impl MixedScenario {
    pub fn new(c1: f64, c2: f64, r1: f64, r2: f64, alpha: f64) -> Result<Self, MixedError> {
        let s = Self { c1, c2, r1, r2, alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), MixedError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.c1) && ok(self.c2)) {
            return Err(MixedError::InvalidScenario("capacities must be positive"));
        }
        if !(ok(self.r1) && ok(self.r2)) {
            return Err(MixedError::InvalidScenario("demands must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(MixedError::InvalidScenario("alpha must lie in [0, 1]"));
        }
        let demand = self.r1 + self.r2;
        let capacity = self.c1 + self.c2;
        if demand >= capacity {
            return Err(MixedError::Infeasible { demand, capacity });
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Link loads `(f1, f2)` of the solution `(x, y)`.
    pub fn loads(&self, x: f64, y: f64) -> (f64, f64) {
        (x + self.r2 - y, self.r1 - x + y)
    }

    /// Group operating cost at `(x, y)`.
    pub fn group_cost(&self, x: f64, y: f64) -> f64 {
        let (f1, f2) = self.loads(x, y);
        let (t1, t2) = (mm1(self.c1, f1), mm1(self.c2, f2));
        let a = self.alpha;
        let own = share(x, t1) + share(self.r1 - x, t2);
        let others = share(self.r2 - y, t1) + share(y, t2);
        let mut total = 0.0;
        if a != 1.0 {
            total += (1.0 - a) * own;
        }
        if a != 0.0 {
            total += a * others;
        }
        // Moving group flow onto a saturated link is never allowed, even when
        // the group ignores its own cost.
        if (x > 0.0 && t1.is_infinite()) || (self.r1 - x > 0.0 && t2.is_infinite()) {
            return f64::INFINITY;
        }
        total
    }

    /// Derivative of the group cost in `x` with `y` held fixed. Saturated
    /// links give infinite values of the appropriate sign; NaN when both are
    /// saturated.
    pub fn group_derivative(&self, x: f64, y: f64) -> f64 {
        let (f1, f2) = self.loads(x, y);
        match (f1 >= self.c1, f2 >= self.c2) {
            (true, true) => return f64::NAN,
            (true, false) => return f64::INFINITY,
            (false, true) => return f64::NEG_INFINITY,
            _ => {}
        }
        let (t1, t2) = (mm1(self.c1, f1), mm1(self.c2, f2));
        let (d1, d2) = (mm1_slope(self.c1, f1), mm1_slope(self.c2, f2));
        let a = self.alpha;
        (1.0 - a) * (t1 - t2 + x * d1 - (self.r1 - x) * d2) + a * ((self.r2 - y) * d1 - y * d2)
    }

    /// Group best response to a fixed Wardrop allocation.
    pub fn group_response(&self, y: f64) -> Result<f64, MixedError> {
        let d = |x: f64| self.group_derivative(x, y);
        let d0 = d(0.0);
        if d0.is_nan() {
            return Err(MixedError::NoFeasibleSplit);
        }
        if d0 >= 0.0 {
            return Ok(0.0);
        }
        let d1 = d(self.r1);
        if d1.is_nan() {
            return Err(MixedError::NoFeasibleSplit);
        }
        if d1 <= 0.0 {
            return Ok(self.r1);
        }
        bisect_increasing(0.0, self.r1, d).ok_or(MixedError::NoFeasibleSplit)
    }

    /// Wardrop allocation against the group split `(x, r1 - x)`.
    pub fn wardrop_response(&self, x: f64) -> Result<f64, MixedError> {
        wardrop_split(self.c1, self.c2, (x, self.r1 - x), self.r2).map(|w| w.link2)
    }
}

/// Wardrop population flow on each link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardropSplit {
    pub link1: f64,
    pub link2: f64,
}

/// Splits `mass` over two M/M/1 links already carrying `group` so that
/// every used link has the least cost.
pub fn wardrop_split(c1: f64, c2: f64, group: (f64, f64), mass: f64) -> Result<WardropSplit, MixedError> {
    // Cost gap T1 - T2 as a function of the flow y sent on link 2; it is
    // nonincreasing in y, so its negation is bisected.
    let gap = |y: f64| {
        let t1 = mm1(c1, group.0 + mass - y);
        let t2 = mm1(c2, group.1 + y);
        match (t1.is_infinite(), t2.is_infinite()) {
            (true, true) => f64::NAN,
            _ => t1 - t2,
        }
    };
    let split = |y: f64| WardropSplit { link1: mass - y, link2: y };
    let g0 = gap(0.0);
    if g0.is_nan() {
        return Err(MixedError::NoFeasibleSplit);
    }
    if g0 <= 0.0 {
        return Ok(split(0.0));
    }
    let g1 = gap(mass);
    if g1.is_nan() {
        return Err(MixedError::NoFeasibleSplit);
    }
    if g1 >= 0.0 {
        if g1.is_infinite() {
            return Err(MixedError::NoFeasibleSplit);
        }
        return Ok(split(mass));
    }
    bisect_increasing(0.0, mass, |y| -gap(y)).map(split).ok_or(MixedError::NoFeasibleSplit)
}

/// Which links the Wardrop population uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedCase {
    BothLinks,
    WardropLink1Only,
    WardropLink2Only,
}

impl MixedCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::BothLinks => "both-links",
            Self::WardropLink1Only => "wardrop-link1-only",
            Self::WardropLink2Only => "wardrop-link2-only",
        }
    }
}

/// Whether the group user splits its flow or sits on a corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcase {
    Interior,
    Boundary,
}

impl Subcase {
    pub fn label(self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::Boundary => "boundary",
        }
    }
}

/// Closed-form coefficient sets.
///
/// `Statement` and `Proof` are two printed versions of the closed form that
/// disagree on the quadratic coefficients and on the windows and boundary
/// tests of the single-link cases. `Derived` re-derives the quadratics by expanding the
/// group's stationarity condition exactly and uses the windows implied by
/// the Wardrop inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Statement,
    Proof,
    Derived,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Statement, Variant::Proof, Variant::Derived];

    pub fn label(self) -> &'static str {
        match self {
            Self::Statement => "statement",
            Self::Proof => "proof",
            Self::Derived => "derived",
        }
    }
}

/// Where a solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    ClosedForm(Variant),
    Numeric,
}

/// `a x^2 + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    /// Real roots in ascending order; a vanishing leading coefficient falls
    /// back to the linear root.
    pub fn roots(&self) -> Vec<f64> {
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs());
        if scale == 0.0 {
            return Vec::new();
        }
        if self.a.abs() <= 1e-14 * scale {
            return if self.b == 0.0 { Vec::new() } else { vec![-self.c / self.b] };
        }
        let disc = self.discriminant();
        if disc < 0.0 {
            return Vec::new();
        }
        // Numerically stable pair.
        let sq = libm::sqrt(disc);
        let q = -0.5 * (self.b + if self.b >= 0.0 { sq } else { -sq });
        let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / self.a, self.c / q] };
        r.sort_by(f64::total_cmp);
        r
    }
}

/// Intermediate quantities of the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    pub cc: f64,
    pub dd: f64,
    pub a1: f64,
    pub b1: f64,
    /// Edge of the case-2 window (its meaning depends on the variant).
    pub c1: f64,
    /// Edge of the case-3 window.
    pub d1: f64,
    /// Interior case-1 point; `None` inside the singular band around 0.5.
    pub m1: Option<f64>,
    pub n1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    /// Quadratic whose root gives the case-2 interior point.
    pub h: Quadratic,
    /// Quadratic whose root gives the case-3 interior point.
    pub g: Quadratic,
}

/// Direct check of the mixed-equilibrium conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedVerification {
    /// Within bounds and both links at least `1e-9` below capacity.
    pub feasible: bool,
    /// Least link cost `A`.
    pub min_cost: f64,
    /// Largest excess `T_l - A` over links the population uses.
    pub wardrop_gap: f64,
    /// Violation of the group's first-order condition.
    pub stationarity: f64,
    /// Best improvement of the group cost on a deviation grid.
    pub deviation_gain: f64,
    pub passed: bool,
}

/// A mixed-equilibrium candidate together with its verification.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    /// Group flow on link 1.
    pub x: f64,
    /// Wardrop flow on link 2.
    pub y: f64,
    pub case: MixedCase,
    pub subcase: Subcase,
    pub origin: Origin,
    pub verification: MixedVerification,
}

impl MixedSolution {
    fn new(s: &MixedScenario, x: f64, y: f64, case: MixedCase, origin: Origin, tol: f64) -> Self {
        let edge = 1e-12 * s.r1.max(1.0);
        let subcase = if x > edge && x < s.r1 - edge { Subcase::Interior } else { Subcase::Boundary };
        let verification = verify_mixed(s, x, y, tol, 1001);
        Self { x, y, case, subcase, origin, verification }
    }

    /// Emitted but failed verification.
    pub fn rejected(&self) -> bool {
        !self.verification.passed
    }
}

/// Case implied by the Wardrop flow `y`.
pub fn classify(s: &MixedScenario, y: f64) -> MixedCase {
    let edge = 1e-9 * s.r2.max(1.0);
    if y <= edge {
        MixedCase::WardropLink1Only
    } else if y >= s.r2 - edge {
        MixedCase::WardropLink2Only
    } else {
        MixedCase::BothLinks
    }
}

/// Checks the Wardrop conditions for the population and the Nash
/// condition for the group at `(x, y)`.
pub fn verify_mixed(s: &MixedScenario, x: f64, y: f64, tol: f64, points: usize) -> MixedVerification {
    let slack = 1e-12;
    let (f1, f2) = s.loads(x, y);
    let in_bounds = x >= -slack && x <= s.r1 + slack && y >= -slack && y <= s.r2 + slack;
    let feasible = in_bounds && f1 < s.c1 - 1e-9 && f2 < s.c2 - 1e-9;
    if !feasible {
        return MixedVerification {
            feasible,
            min_cost: f64::NAN,
            wardrop_gap: f64::INFINITY,
            stationarity: f64::INFINITY,
            deviation_gain: f64::INFINITY,
            passed: false,
        };
    }
    let (t1, t2) = (mm1(s.c1, f1), mm1(s.c2, f2));
    let min_cost = t1.min(t2);
    let used = 1e-12 * s.r2.max(1.0);
    let mut wardrop_gap: f64 = 0.0;
    if s.r2 - y > used {
        wardrop_gap = wardrop_gap.max(t1 - min_cost);
    }
    if y > used {
        wardrop_gap = wardrop_gap.max(t2 - min_cost);
    }

    let d = s.group_derivative(x, y);
    let edge = 1e-12 * s.r1.max(1.0);
    let stationarity = if x <= edge {
        (-d).max(0.0)
    } else if x >= s.r1 - edge {
        d.max(0.0)
    } else {
        d.abs()
    };

    let current = s.group_cost(x, y);
    let best = linspace(0.0, s.r1, points).into_iter().map(|z| s.group_cost(z, y)).fold(current, f64::min);
    let deviation_gain = current - best;
    let passed = wardrop_gap <= tol && stationarity <= tol && deviation_gain <= tol;
    MixedVerification { feasible, min_cost, wardrop_gap, stationarity, deviation_gain, passed }
}

/// Closed-form candidates of one coefficient variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub variant: Variant,
    pub intermediates: Intermediates,
    /// Every candidate the formulas produce, verified or not.
    pub candidates: Vec<MixedSolution>,
    /// The interior case-1 formula was skipped because `|2 alpha - 1| < 0.05`.
    pub case1_skipped: bool,
}

impl ClosedForm {
    pub fn verified(&self) -> impl Iterator<Item = &MixedSolution> {
        self.candidates.iter().filter(|c| !c.rejected())
    }
}

/// Bound on `|2 alpha - 1|` below which the case-1 formula is singular and
/// skipped.
pub const SINGULAR_BAND: f64 = 0.05;

/// Polynomial of degree at most three, lowest coefficient first.
type Poly = [f64; 4];

fn pmul(p: &Poly, q: &Poly) -> Poly {
    let mut out = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 - i {
            out[i + j] += p[i] * q[j];
        }
    }
    out
}

fn pcomb(terms: &[(f64, Poly)]) -> Poly {
    let mut out = [0.0; 4];
    for (w, p) in terms {
        for k in 0..4 {
            out[k] += w * p[k];
        }
    }
    out
}

/// Numerator of the group derivative at fixed Wardrop flow `y`, as a
/// polynomial in `x`. Multiplying the derivative by the positive factor
/// `(C1 - f1)^2 (C2 - f2)^2` leaves this numerator; its cubic terms cancel.
fn stationarity_numerator(s: &MixedScenario, y: f64) -> Quadratic {
    let a = s.alpha;
    let u: Poly = [s.c1 - s.r2 + y, -1.0, 0.0, 0.0];
    let v: Poly = [s.c2 - s.r1 - y, 1.0, 0.0, 0.0];
    let x: Poly = [0.0, 1.0, 0.0, 0.0];
    let rest: Poly = [s.r1, -1.0, 0.0, 0.0];
    let uu = pmul(&u, &u);
    let vv = pmul(&v, &v);
    let uvv = pmul(&u, &vv);
    let uuv = pmul(&uu, &v);
    let p = pcomb(&[
        (1.0 - a, uvv),
        (-(1.0 - a), uuv),
        (1.0 - a, pmul(&x, &vv)),
        (-(1.0 - a), pmul(&rest, &uu)),
        (a * (s.r2 - y), vv),
        (-a * y, uu),
    ]);
    Quadratic { a: p[2], b: p[1], c: p[0] }
}

/// The `Statement` coefficients, applied to both single-link cases.
fn statement_quadratic(s: &MixedScenario) -> Quadratic {
    let MixedScenario { c1, c2, r1, r2, alpha: a } = *s;
    Quadratic {
        a: (c1 - c2 + r2) * (1.0 - a) - a * r2,
        b: c1 * (1.0 - a) * (2.0 * (c2 - r2 - r1) + 2.0 * (c2 - r2)) + 2.0 * a * r2 * c1,
        c: c1 * (1.0 - a) * ((c2 - r1 - r2) * (c2 - r1 - r2) - c1 * (c2 - r2)) - a * r2 * c1 * c1,
    }
}

/// Case-2 coefficients of the proof.
fn proof_h(s: &MixedScenario) -> Quadratic {
    let MixedScenario { c1, c2, r1, r2, alpha: a } = *s;
    Quadratic {
        a: (c1 - c2 - r2) * (1.0 - a) + a * r2,
        b: 2.0 * (1.0 - a) * ((c1 - r2) * (2.0 * (c2 - r2) + r1)) + 2.0 * a * r2 * (c2 - r1),
        c: (1.0 - a) * (c1 - r2) * ((c2 - r1) * (c2 - r1) - (c2 - r1) * (c1 - r2) - r1 * (c1 - r2))
            + a * r2 * (c2 - r1) * (c2 - r1),
    }
}

/// Case-3 coefficients of the proof.
fn proof_g(s: &MixedScenario) -> Quadratic {
    let MixedScenario { c1, c2, r1, r2, alpha: a } = *s;
    Quadratic {
        a: (c1 - c2 + r2) * (1.0 - a) - a * r2,
        b: (1.0 - a) * (4.0 * c1 * (c2 - r1 - r2) + 2.0 * r1 * c1) - 2.0 * a * r2 * c1,
        c: (1.0 - a) * ((c2 - r1 - r2 + c1) * c1 * (c2 - r2 - r1) - r1 * c1 * c1) + a * r2 * c1 * c1,
    }
}

fn root_in(q: &Quadratic, lo: f64, hi: f64, closed: bool) -> Vec<f64> {
    let eps = 1e-12 * hi.abs().max(1.0);
    q.roots()
        .into_iter()
        .filter(|&x| if closed { x >= lo - eps && x <= hi + eps } else { x > lo && x < hi })
        .map(|x| x.clamp(lo.min(hi), hi.max(lo)))
        .collect()
}

/// Evaluates the closed-form candidates of `variant`. Candidates that fail
/// verification at `tol` are kept and flagged, not dropped.
pub fn mixed_closed_form(s: &MixedScenario, variant: Variant, tol: f64) -> Result<ClosedForm, MixedError> {
    s.validate()?;
    let MixedScenario { c1: cap1, c2: cap2, r1, r2, alpha } = *s;
    let cc = -(cap2 - cap1) / 2.0 - (r2 - r1) / 2.0;
    let dd = -(cap2 - cap1) / 2.0 + (r2 + r1) / 2.0;
    let a1 = cc.max(0.0);
    let b1 = dd.min(r1);
    let denom = 2.0 * alpha - 1.0;
    let case1_skipped = denom.abs() < SINGULAR_BAND;
    let (m1, n1) = if case1_skipped {
        (None, None)
    } else {
        (
            Some((-alpha * (cap2 - cap1) + r1 * denom) / (2.0 * denom)),
            Some(((cap1 - cap2) * (1.0 - alpha) + denom * r2) / (2.0 * denom)),
        )
    };
    let (c1, d1, h, g) = match variant {
        Variant::Statement => {
            let q = statement_quadratic(s);
            (cc.max(0.0), dd.min(r1), q, q)
        }
        Variant::Proof => (cc.min(r1), dd.max(0.0), proof_h(s), proof_g(s)),
        Variant::Derived => (cc.min(r1), dd.max(0.0), stationarity_numerator(s, 0.0), stationarity_numerator(s, r2)),
    };

    let origin = Origin::ClosedForm(variant);
    let mut out = Vec::new();
    let mut push = |x: f64, y: f64, case: MixedCase| {
        out.push(MixedSolution::new(s, x, y, case, origin, tol));
    };

    // Case 1: the population uses both links, so T1 = T2 and y = x - cc.
    let interior = matches!(m1, Some(m) if a1 < m && m < b1);
    if let (true, Some(m), Some(n)) = (interior, m1, n1) {
        push(m, n, MixedCase::BothLinks);
    } else {
        match variant {
            Variant::Statement | Variant::Proof => {
                if !case1_skipped {
                    if r1 < (r2 + cap2 - cap1).min((alpha * (cap2 - cap1) + 2.0 * alpha * r2) / denom) {
                        push(0.0, -cc, MixedCase::BothLinks);
                    }
                    if r1 < (alpha * (cap2 - cap1) / (1.0 - 2.0 * alpha)).min(r2 - (cap2 - cap1)) {
                        push(r1, r1 - cc, MixedCase::BothLinks);
                    }
                }
            }
            Variant::Derived => {
                for (x, y) in [(0.0, -cc), (r1, r1 - cc)] {
                    if y > 0.0 && y < r2 {
                        push(x, y, MixedCase::BothLinks);
                    }
                }
            }
        }
    }

    // Case 2: the population uses link 1 only (y = 0).
    let mut m2 = None;
    match variant {
        Variant::Statement => {
            let roots = root_in(&h, c1, r1, false);
            m2 = roots.first().copied();
            if roots.is_empty() {
                let hr = h.eval(r1);
                if hr > 0.0 {
                    push(c1, 0.0, MixedCase::WardropLink1Only);
                } else if hr < 0.0 {
                    push(r1, 0.0, MixedCase::WardropLink1Only);
                }
            }
            for x in roots {
                push(x, 0.0, MixedCase::WardropLink1Only);
            }
        }
        Variant::Proof => {
            let roots = root_in(&h, 0.0, c1, false);
            m2 = roots.first().copied();
            if roots.is_empty() {
                let h0 = h.eval(0.0);
                if h0 > 0.0 {
                    push(0.0, 0.0, MixedCase::WardropLink1Only);
                } else if h0 < 0.0 {
                    push(c1, 0.0, MixedCase::WardropLink1Only);
                }
            }
            for x in roots {
                push(x, 0.0, MixedCase::WardropLink1Only);
            }
        }
        Variant::Derived => {
            if c1 >= 0.0 {
                let roots = root_in(&h, 0.0, c1, true);
                m2 = roots.first().copied();
                for x in roots {
                    push(x, 0.0, MixedCase::WardropLink1Only);
                }
                if h.eval(0.0) >= 0.0 {
                    push(0.0, 0.0, MixedCase::WardropLink1Only);
                }
                if h.eval(c1) <= 0.0 {
                    push(c1, 0.0, MixedCase::WardropLink1Only);
                }
            }
        }
    }

    // Case 3: the population uses link 2 only (y = r2).
    let mut m3 = None;
    match variant {
        Variant::Statement => {
            let roots = root_in(&g, 0.0, d1, false);
            m3 = roots.first().copied();
            if roots.is_empty() {
                let g0 = g.eval(0.0);
                if g0 > 0.0 {
                    push(0.0, r2, MixedCase::WardropLink2Only);
                } else if g0 < 0.0 {
                    push(d1, r2, MixedCase::WardropLink2Only);
                }
            }
            for x in roots {
                push(x, r2, MixedCase::WardropLink2Only);
            }
        }
        Variant::Proof => {
            let roots = root_in(&g, d1, r1, false);
            m3 = roots.first().copied();
            if roots.is_empty() {
                let gr = g.eval(r2);
                if gr > 0.0 {
                    push(0.0, r2, MixedCase::WardropLink2Only);
                } else if gr < 0.0 {
                    push(d1, r2, MixedCase::WardropLink2Only);
                }
            }
            for x in roots {
                push(x, r2, MixedCase::WardropLink2Only);
            }
        }
        Variant::Derived => {
            if d1 <= r1 {
                let roots = root_in(&g, d1, r1, true);
                m3 = roots.first().copied();
                for x in roots {
                    push(x, r2, MixedCase::WardropLink2Only);
                }
                if g.eval(d1) >= 0.0 {
                    push(d1, r2, MixedCase::WardropLink2Only);
                }
                if g.eval(r1) <= 0.0 {
                    push(r1, r2, MixedCase::WardropLink2Only);
                }
            }
        }
    }

    Ok(ClosedForm {
        variant,
        intermediates: Intermediates { cc, dd, a1, b1, c1, d1, m1, n1, m2, m3, h, g },
        candidates: out,
        case1_skipped,
    })
}

/// How a printed variant departs from the derived closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    /// The variant emits a candidate that fails verification.
    Rejected,
    /// A verified derived solution that the variant does not produce.
    Missed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    pub variant: Variant,
    pub kind: AuditKind,
    pub case: MixedCase,
    pub x: f64,
    pub y: f64,
}

/// Compares the statement and proof variants with the derived closed form.
/// Two solutions agree when both coordinates are within `radius`.
pub fn case_audit(s: &MixedScenario, tol: f64, radius: f64) -> Result<Vec<AuditFinding>, MixedError> {
    let derived = mixed_closed_form(s, Variant::Derived, tol)?;
    let mut out = Vec::new();
    for variant in [Variant::Statement, Variant::Proof] {
        let cf = mixed_closed_form(s, variant, tol)?;
        let finding = |kind, c: &MixedSolution| AuditFinding { variant, kind, case: c.case, x: c.x, y: c.y };
        out.extend(cf.candidates.iter().filter(|c| c.rejected()).map(|c| finding(AuditKind::Rejected, c)));
        for d in derived.verified() {
            let found = cf.verified().any(|c| (c.x - d.x).abs() <= radius && (c.y - d.y).abs() <= radius);
            if !found {
                out.push(finding(AuditKind::Missed, d));
            }
        }
    }
    Ok(out)
}

/// Settings of the numerical mixed solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedConfig {
    /// Number of evenly spaced starting group splits.
    pub starts: usize,
    /// Change in `x` below which alternation stops.
    pub tol: f64,
    pub max_alternations: usize,
    /// Sup-norm radius on `(x, y)` merging duplicate solutions.
    pub dedupe_radius: f64,
    pub verify_tol: f64,
    /// Grid points used to bracket roots of `x -> BR(W(x)) - x`.
    pub bracket_points: usize,
    pub bracketing: bool,
}

impl Default for MixedConfig {
    fn default() -> Self {
        Self {
            starts: 201,
            tol: 1e-9,
            max_alternations: 10_000,
            dedupe_radius: 1e-5,
            verify_tol: 1e-7,
            bracket_points: 201,
            bracketing: true,
        }
    }
}

/// Result of [`mixed_numeric`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixedNumeric {
    /// Verified solutions sorted by `x`.
    pub solutions: Vec<MixedSolution>,
    /// Start indices whose alternation did not settle.
    pub non_converged: Vec<usize>,
    /// Distinct points that failed verification.
    pub rejected: usize,
}

/// Independent numerical solver: alternates the group best response with
/// the Wardrop split from a grid of starts, and brackets the fixed points of
/// the composed map so repelling equilibria are found as well.
pub fn mixed_numeric(s: &MixedScenario, cfg: &MixedConfig) -> Result<MixedNumeric, MixedError> {
    s.validate()?;
    let compose = |x: f64| -> Option<f64> { s.group_response(s.wardrop_response(x).ok()?).ok() };

    let mut points: Vec<f64> = Vec::new();
    if cfg.bracketing {
        points = scan_roots(0.0, s.r1, cfg.bracket_points, &|x| compose(x).map(|b| b - x));
    }

    let mut non_converged = Vec::new();
    for (k, x0) in linspace(0.0, s.r1, cfg.starts).into_iter().enumerate() {
        let mut x = x0;
        let mut settled = false;
        for _ in 0..cfg.max_alternations {
            let Some(next) = compose(x) else { break };
            let step = (next - x).abs();
            x = next;
            if step < cfg.tol {
                settled = true;
                break;
            }
        }
        if settled {
            points.push(x);
        } else {
            non_converged.push(k);
        }
    }

    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for x in points {
        let Ok(y) = s.wardrop_response(x) else { continue };
        let near = distinct.iter().any(|&(a, b)| (a - x).abs().max((b - y).abs()) <= cfg.dedupe_radius);
        if !near {
            distinct.push((x, y));
        }
    }
    let mut solutions = Vec::new();
    let mut rejected = 0;
    for (x, y) in distinct {
        let sol = MixedSolution::new(s, x, y, classify(s, y), Origin::Numeric, cfg.verify_tol);
        if sol.rejected() {
            rejected += 1;
        } else {
            solutions.push(sol);
        }
    }
    solutions.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(MixedNumeric { solutions, non_converged, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(alpha: f64) -> MixedScenario {
        MixedScenario::new(4.0, 4.0, 1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(matches!(MixedScenario::new(1.0, 1.0, 1.0, 1.0, 0.5), Err(MixedError::Infeasible { .. })));
        assert!(MixedScenario::new(4.0, 3.0, 1.2, 1.0, 1.5).is_err());
        assert!(MixedScenario::new(4.0, 0.0, 1.2, 1.0, 0.5).is_err());
    }

    #[test]
    fn wardrop_split_cases() {
        let w = wardrop_split(4.0, 4.0, (0.5, 0.5), 1.0).unwrap();
        assert!((w.link2 - 0.5).abs() < 1e-12);
        // T1 = T2 already at y = 0
        let w = wardrop_split(4.0, 3.0, (0.6, 0.6), 1.0).unwrap();
        assert_eq!(w.link2, 0.0);
        // link 1 nearly saturated by the group
        let w = wardrop_split(4.0, 3.0, (3.9, 0.0), 1.0).unwrap();
        assert_eq!(w.link2, 1.0);
        assert!(mm1(3.0, 1.0) <= mm1(4.0, 3.9));
        assert_eq!(wardrop_split(1.0, 1.0, (1.0, 1.0), 1.0), Err(MixedError::NoFeasibleSplit));
    }

    #[test]
    fn quadratic_roots() {
        let q = Quadratic { a: 1.0, b: -3.0, c: 2.0 };
        assert_eq!(q.roots(), [1.0, 2.0]);
        assert_eq!(Quadratic { a: 0.0, b: 2.0, c: -1.0 }.roots(), [0.5]);
        assert!(Quadratic { a: 1.0, b: 0.0, c: 1.0 }.roots().is_empty());
    }

    #[test]
    fn derived_numerator_matches_derivative_sign() {
        let s = MixedScenario::new(4.0, 3.0, 1.2, 1.0, 0.7).unwrap();
        for y in [0.0, 1.0] {
            let q = stationarity_numerator(&s, y);
            for x in linspace(0.0, 1.2, 13) {
                let (f1, f2) = s.loads(x, y);
                let scale = (s.c1 - f1).powi(2) * (s.c2 - f2).powi(2);
                let d = s.group_derivative(x, y);
                assert!((q.eval(x) - d * scale).abs() < 1e-10, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn statement_coefficients_equal_case_three_numerator() {
        let s = MixedScenario::new(4.0, 3.0, 1.2, 1.0, 0.3).unwrap();
        let a = statement_quadratic(&s);
        let b = stationarity_numerator(&s, s.r2);
        assert!((a.a - b.a).abs() < 1e-12 && (a.b - b.b).abs() < 1e-12 && (a.c - b.c).abs() < 1e-12);
    }

    #[test]
    fn symmetric_interior_solution() {
        for alpha in [0.1, 0.3, 0.7, 0.9] {
            let s = sym(alpha);
            for v in Variant::ALL {
                let cf = mixed_closed_form(&s, v, 1e-10).unwrap();
                assert!(cf.candidates[0].x == 0.5 && cf.candidates[0].y == 0.5);
                assert!(!cf.candidates[0].rejected());
            }
        }
        let cf = mixed_closed_form(&sym(0.52), Variant::Derived, 1e-10).unwrap();
        assert!(cf.case1_skipped && cf.intermediates.m1.is_none());
    }

    #[test]
    fn verify_rejects_perturbation() {
        let s = sym(0.3);
        assert!(verify_mixed(&s, 0.5, 0.5, 1e-10, 1001).passed);
        let v = verify_mixed(&s, 0.6, 0.5, 1e-10, 1001);
        assert!(!v.passed && v.wardrop_gap > 1e-3);
    }

    #[test]
    fn corners_need_strong_cooperation() {
        for alpha in [0.1, 0.3, 0.7, 0.9] {
            for (x, y) in [(0.0, 0.0), (1.0, 1.0)] {
                assert_eq!(verify_mixed(&sym(alpha), x, y, 1e-9, 1001).passed, alpha >= 0.5, "{alpha} {x}");
            }
        }
    }

    #[test]
    fn numeric_symmetric_solutions() {
        let n = mixed_numeric(&sym(0.3), &MixedConfig::default()).unwrap();
        assert_eq!(n.solutions.len(), 1);
        assert!((n.solutions[0].x - 0.5).abs() < 1e-9);
        let n = mixed_numeric(&sym(0.7), &MixedConfig::default()).unwrap();
        let xs: Vec<f64> = n.solutions.iter().map(|s| s.x).collect();
        assert_eq!(xs.len(), 3, "{xs:?}");
    }

    #[test]
    fn fig7_selfish_is_unique() {
        let s = MixedScenario::new(4.0, 3.0, 1.2, 1.0, 0.0).unwrap();
        let n = mixed_numeric(&s, &MixedConfig::default()).unwrap();
        assert_eq!(n.solutions.len(), 1);
        assert!((n.solutions[0].x - 0.6).abs() < 1e-8 && n.solutions[0].y.abs() < 1e-12);
    }
}
