use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::BandSpec;

/// A boundary function on `[0, 1]` for functional corridors.
#[derive(Clone)]
pub enum Boundary {
    /// `c₀ + c₁ s + c₂ s² + ...`
    Polynomial(Vec<f64>),
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Boundary {
    pub fn constant(c: f64) -> Self {
        Boundary::Polynomial(vec![c])
    }

    pub fn linear(intercept: f64, slope: f64) -> Self {
        Boundary::Polynomial(vec![intercept, slope])
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Boundary::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Boundary::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * s + ci),
            Boundary::Custom { f, .. } => f(s),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Boundary::Polynomial(c) => {
                let terms: Vec<String> = c.iter().map(|v| format!("{v:e}")).collect();
                format!("poly[{}]", terms.join(","))
            }
            Boundary::Custom { name, .. } => format!("custom[{name}]"),
        }
    }
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone)]
pub enum CorridorShape {
    Constant { a: f64, b: f64 },
    /// Band `[a t^α, b t^α]` for a run of length `t`.
    Scaled { a: f64, b: f64, alpha: f64 },
    /// Band `[f(s/t), g(s/t)]` for a run of length `t`.
    Functional { f: Boundary, g: Boundary },
}

/// Boundary specification of the moving corridor, before the environment
/// shift `βW_s` is added.
#[derive(Debug, Clone)]
pub struct Corridor {
    shape: CorridorShape,
    start_window: (f64, f64),
    terminal_window: (f64, f64),
    beta: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::param(format!("beta must be finite, got {beta}")));
    }
    Ok(())
}

fn check_basic_relationship(a: f64, b: f64, start: (f64, f64), terminal: (f64, f64)) -> Result<()> {
    let (a0, b0) = start;
    let (at, bt) = terminal;
    let ok = a < a0 && a0 <= b0 && b0 < b && a <= at && at < bt && bt <= b;
    if !ok || ![a, b, a0, b0, at, bt].iter().all(|v| v.is_finite()) {
        return Err(Error::param(format!(
            "corridor violates the basic relationship a < a0 <= b0 < b, a <= a' < b' <= b \
             (a={a}, b={b}, a0={a0}, b0={b0}, a'={at}, b'={bt})"
        )));
    }
    Ok(())
}

impl Corridor {
    pub fn constant(a: f64, b: f64, start_window: (f64, f64), terminal_window: (f64, f64), beta: f64) -> Result<Self> {
        check_beta(beta)?;
        check_basic_relationship(a, b, start_window, terminal_window)?;
        Ok(Corridor {
            shape: CorridorShape::Constant { a, b },
            start_window,
            terminal_window,
            beta,
        })
    }

    /// Constant band, start window at the band centre, terminal window equal
    /// to the band.
    pub fn band(band: BandSpec, beta: f64) -> Result<Self> {
        let c = band.center();
        Self::constant(band.lower(), band.upper(), (c, c), (band.lower(), band.upper()), beta)
    }

    /// Band whose edges scale like `t^α` with the run length `t`; windows are
    /// given in unscaled units and scale the same way.
    pub fn scaled(
        a: f64,
        b: f64,
        alpha: f64,
        start_window: (f64, f64),
        terminal_window: (f64, f64),
        beta: f64,
    ) -> Result<Self> {
        check_beta(beta)?;
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::param(format!(
                "alpha must lie in (0, 1/2) for the small-deviation regime, got {alpha}"
            )));
        }
        check_basic_relationship(a, b, start_window, terminal_window)?;
        Ok(Corridor {
            shape: CorridorShape::Scaled { a, b, alpha },
            start_window,
            terminal_window,
            beta,
        })
    }

    /// Corridor `[f(s/t), g(s/t)]`; requires `f < g` on `[0, 1]`,
    /// `f(0) < a0 <= b0 < g(0)` and `f(1) <= a' < b' <= g(1)`.
    pub fn functional(
        f: Boundary,
        g: Boundary,
        start_window: (f64, f64),
        terminal_window: (f64, f64),
        beta: f64,
    ) -> Result<Self> {
        check_beta(beta)?;
        const SAMPLES: usize = 2000;
        for i in 0..=SAMPLES {
            let s = i as f64 / SAMPLES as f64;
            let (fs, gs) = (f.eval(s), g.eval(s));
            if !(fs.is_finite() && gs.is_finite()) || fs >= gs {
                return Err(Error::param(format!(
                    "functional corridor requires f(s) < g(s) on [0, 1]; fails at s = {s} (f = {fs}, g = {gs})"
                )));
            }
        }
        let (a0, b0) = start_window;
        let (at, bt) = terminal_window;
        let (f0, g0, f1, g1) = (f.eval(0.0), g.eval(0.0), f.eval(1.0), g.eval(1.0));
        if !(f0 < a0 && a0 <= b0 && b0 < g0) {
            return Err(Error::param(format!(
                "functional corridor requires f(0) < a0 <= b0 < g(0) (f(0)={f0}, a0={a0}, b0={b0}, g(0)={g0})"
            )));
        }
        if !(f1 <= at && at < bt && bt <= g1) {
            return Err(Error::param(format!(
                "functional corridor requires f(1) <= a' < b' <= g(1) (f(1)={f1}, a'={at}, b'={bt}, g(1)={g1})"
            )));
        }
        Ok(Corridor {
            shape: CorridorShape::Functional { f, g },
            start_window,
            terminal_window,
            beta,
        })
    }

    pub fn shape(&self) -> &CorridorShape {
        &self.shape
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn start_window(&self) -> (f64, f64) {
        self.start_window
    }

    pub fn terminal_window(&self) -> (f64, f64) {
        self.terminal_window
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Corridor { beta, ..self.clone() }
    }

    pub fn with_windows(&self, start_window: (f64, f64), terminal_window: (f64, f64)) -> Result<Self> {
        match &self.shape {
            CorridorShape::Constant { a, b } => Self::constant(*a, *b, start_window, terminal_window, self.beta),
            CorridorShape::Scaled { a, b, alpha } => {
                Self::scaled(*a, *b, *alpha, start_window, terminal_window, self.beta)
            }
            CorridorShape::Functional { f, g } => {
                Self::functional(f.clone(), g.clone(), start_window, terminal_window, self.beta)
            }
        }
    }

    /// Translates every boundary and window by `c` (constant corridors only).
    pub fn shifted(&self, c: f64) -> Result<Self> {
        match &self.shape {
            CorridorShape::Constant { a, b } => Self::constant(
                a + c,
                b + c,
                (self.start_window.0 + c, self.start_window.1 + c),
                (self.terminal_window.0 + c, self.terminal_window.1 + c),
                self.beta,
            ),
            _ => Err(Error::param("only constant corridors can be shifted")),
        }
    }

    /// The band at time 0 of a run of length `horizon`.
    pub fn initial_band(&self, horizon: f64) -> BandSpec {
        let g = Geometry::resolve(self, horizon);
        BandSpec::new(g.lower(0.0), g.lower(0.0) + g.width(0.0)).expect("validated corridor")
    }

    /// The constant band, if this corridor has one.
    pub fn constant_band(&self) -> Option<BandSpec> {
        match self.shape {
            CorridorShape::Constant { a, b } => BandSpec::new(a, b).ok(),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        let shape = match &self.shape {
            CorridorShape::Constant { a, b } => format!("constant({a:e},{b:e})"),
            CorridorShape::Scaled { a, b, alpha } => format!("scaled({a:e},{b:e},{alpha:e})"),
            CorridorShape::Functional { f, g } => format!("functional({f:?},{g:?})"),
        };
        format!(
            "{shape};start=({:e},{:e});terminal=({:e},{:e});beta={:e}",
            self.start_window.0, self.start_window.1, self.terminal_window.0, self.terminal_window.1, self.beta
        )
    }

    /// Stable 64-bit FNV-1a hash of the corridor description, as hex.
    pub fn id(&self) -> String {
        let hash = self
            .describe()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        format!("{hash:016x}")
    }
}

/// A corridor resolved for one run length: absolute lower edge and width as
/// functions of time, before adding `βW`.
pub(crate) struct Geometry<'a> {
    corridor: &'a Corridor,
    horizon: f64,
    scale: f64,
}

impl<'a> Geometry<'a> {
    pub(crate) fn resolve(corridor: &'a Corridor, horizon: f64) -> Self {
        let scale = match corridor.shape {
            CorridorShape::Scaled { alpha, .. } => horizon.powf(alpha),
            _ => 1.0,
        };
        Geometry {
            corridor,
            horizon,
            scale,
        }
    }

    pub(crate) fn lower(&self, s: f64) -> f64 {
        match &self.corridor.shape {
            CorridorShape::Constant { a, .. } => *a,
            CorridorShape::Scaled { a, .. } => a * self.scale,
            CorridorShape::Functional { f, .. } => f.eval(s / self.horizon),
        }
    }

    pub(crate) fn width(&self, s: f64) -> f64 {
        match &self.corridor.shape {
            CorridorShape::Constant { a, b } => b - a,
            CorridorShape::Scaled { a, b, .. } => (b - a) * self.scale,
            CorridorShape::Functional { f, g } => {
                let u = s / self.horizon;
                g.eval(u) - f.eval(u)
            }
        }
    }

    pub(crate) fn constant_width(&self) -> bool {
        !matches!(self.corridor.shape, CorridorShape::Functional { .. })
    }

    /// Windows in absolute coordinates (scaled for scaled corridors).
    pub(crate) fn start_window(&self) -> (f64, f64) {
        let (lo, hi) = self.corridor.start_window;
        (lo * self.scale, hi * self.scale)
    }

    pub(crate) fn terminal_window(&self) -> (f64, f64) {
        let (lo, hi) = self.corridor.terminal_window;
        (lo * self.scale, hi * self.scale)
    }
}
