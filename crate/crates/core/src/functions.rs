//! Coefficient maps `x -> q(x), a(x)` and kernels `(x, y) -> J(x, y)`.
//!
//! The built-in kinds are the ones a problem file can name. Reflection, offsets and
//! scaling are represented as wrappers so derived problems keep evaluating the
//! original analytic maps instead of samples.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative slack used by every strict band test `|x - y| < r`.
///
/// Grid differences carry rounding of order `1e-15 * |x|`; without the slack a node
/// pair sitting exactly on the band edge would be included or excluded depending
/// on the last bit of the subtraction.
pub const BAND_RTOL: f64 = 1e-9;

/// Strict band membership `dist < radius`, robust to rounding at the edge.
#[inline]
pub fn in_band(dist: f64, radius: f64) -> bool {
    dist < radius * (1.0 - BAND_RTOL)
}

pub type CoefficientFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `inside` on the closed window `|x - center| <= radius`, `outside` elsewhere.
    IndicatorBump {
        center: f64,
        radius: f64,
        inside: f64,
        outside: f64,
    },
    /// `base + height * max(0, 1 - |x - center| / radius)`.
    Tent {
        center: f64,
        radius: f64,
        height: f64,
        base: f64,
    },
    /// Piecewise-linear through sorted `(x, value)` pairs, constant beyond the ends.
    Table(Vec<(f64, f64)>),
    /// `x -> sign * inner(pivot - x)`, with `sign = -1` when `negate`.
    Reflected {
        inner: Box<Coefficient>,
        pivot: f64,
        negate: bool,
    },
    /// `x -> inner(x) + offset`.
    Offset {
        inner: Box<Coefficient>,
        offset: f64,
    },
    Custom(CoefficientFn),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Affine { intercept, slope } => {
                write!(f, "Affine({intercept} + {slope} x)")
            }
            Coefficient::IndicatorBump {
                center,
                radius,
                inside,
                outside,
            } => write!(
                f,
                "IndicatorBump(c={center}, r={radius}, {inside}/{outside})"
            ),
            Coefficient::Tent {
                center,
                radius,
                height,
                base,
            } => write!(f, "Tent(c={center}, r={radius}, h={height}, b={base})"),
            Coefficient::Table(t) => write!(f, "Table({} points)", t.len()),
            Coefficient::Reflected {
                inner,
                pivot,
                negate,
            } => write!(f, "Reflected({inner:?}, pivot={pivot}, negate={negate})"),
            Coefficient::Offset { inner, offset } => write!(f, "Offset({inner:?} + {offset})"),
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Coefficient {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Custom(Arc::new(f))
    }

    /// Builds a coefficient from a problem-file kind name and its parameter list.
    pub fn from_kind(kind: &str, params: &[f64]) -> Result<Self> {
        let want = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "coefficient kind '{kind}' takes {k} parameters, got {}",
                    params.len()
                )))
            }
        };
        match kind {
            "constant" => {
                want(1)?;
                Ok(Coefficient::Constant(params[0]))
            }
            "affine" => {
                want(2)?;
                Ok(Coefficient::Affine {
                    intercept: params[0],
                    slope: params[1],
                })
            }
            "indicator-bump" => {
                want(4)?;
                if params[1] < 0.0 {
                    return Err(Error::Parse("indicator-bump radius must be >= 0".into()));
                }
                Ok(Coefficient::IndicatorBump {
                    center: params[0],
                    radius: params[1],
                    inside: params[2],
                    outside: params[3],
                })
            }
            "tent" => {
                want(4)?;
                if params[1] <= 0.0 {
                    return Err(Error::Parse("tent radius must be > 0".into()));
                }
                Ok(Coefficient::Tent {
                    center: params[0],
                    radius: params[1],
                    height: params[2],
                    base: params[3],
                })
            }
            "table" => {
                if params.len() < 2 || !params.len().is_multiple_of(2) {
                    return Err(Error::Parse(
                        "table takes a flat list of (x, value) pairs".into(),
                    ));
                }
                let pts: Vec<(f64, f64)> = params.chunks(2).map(|p| (p[0], p[1])).collect();
                Self::table(pts)
            }
            other => Err(Error::Parse(format!("unknown coefficient kind '{other}'"))),
        }
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parse("empty table".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Parse(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Coefficient::Table(points))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Affine { intercept, slope } => intercept + slope * x,
            Coefficient::IndicatorBump {
                center,
                radius,
                inside,
                outside,
            } => {
                if (x - center).abs() <= *radius {
                    *inside
                } else {
                    *outside
                }
            }
            Coefficient::Tent {
                center,
                radius,
                height,
                base,
            } => base + height * (1.0 - (x - center).abs() / radius).max(0.0),
            Coefficient::Table(pts) => interp_table(pts, x),
            Coefficient::Reflected {
                inner,
                pivot,
                negate,
            } => {
                let v = inner.eval(pivot - x);
                if *negate {
                    -v
                } else {
                    v
                }
            }
            Coefficient::Offset { inner, offset } => inner.eval(x) + offset,
            Coefficient::Custom(f) => f(x),
        }
    }

    /// `x -> +/- self(pivot - x)`. Reflecting a reflection about the same pivot
    /// with the same sign flag unwraps it.
    pub fn reflected(&self, pivot: f64, negate: bool) -> Self {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(if negate { -c } else { *c }),
            Coefficient::Reflected {
                inner,
                pivot: p,
                negate: n,
            } if *p == pivot && *n == negate => (**inner).clone(),
            _ => Coefficient::Reflected {
                inner: Box::new(self.clone()),
                pivot,
                negate,
            },
        }
    }

    pub fn offset(&self, c: f64) -> Self {
        match self {
            Coefficient::Constant(v) => Coefficient::Constant(v + c),
            Coefficient::Offset { inner, offset } => Coefficient::Offset {
                inner: inner.clone(),
                offset: offset + c,
            },
            _ => Coefficient::Offset {
                inner: Box::new(self.clone()),
                offset: c,
            },
        }
    }

    /// The value when the map is a constant by construction.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Affine { intercept, slope } if *slope == 0.0 => Some(*intercept),
            Coefficient::Reflected { inner, negate, .. } => {
                inner.as_constant().map(|c| if *negate { -c } else { c })
            }
            Coefficient::Offset { inner, offset } => inner.as_constant().map(|c| c + offset),
            _ => None,
        }
    }
}

fn interp_table(pts: &[(f64, f64)], x: f64) -> f64 {
    let first = pts[0];
    let last = pts[pts.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    // first index with abscissa > x
    let k = pts.partition_point(|p| p.0 <= x);
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Clone)]
pub enum Kernel {
    /// `value * 1{|x - y| < radius}`.
    ConstantBand {
        value: f64,
        radius: f64,
    },
    /// `height * max(0, 1 - |x - y| / radius)`.
    TentBand {
        height: f64,
        radius: f64,
    },
    /// Bilinear interpolation of a tensor table, clamped at the table edges and cut
    /// to zero for `|x - y| >= cutoff`.
    Table2d {
        xs: Vec<f64>,
        ys: Vec<f64>,
        /// Row-major in `x`: `values[i * ys.len() + j] = J(xs[i], ys[j])`.
        values: Vec<f64>,
        cutoff: f64,
    },
    Scaled {
        inner: Box<Kernel>,
        factor: f64,
    },
    /// `(x, y) -> inner(pivot - x, pivot - y)`.
    Reflected {
        inner: Box<Kernel>,
        pivot: f64,
    },
    /// Translation-invariant kernel `(x, y) -> profile(x - y)`.
    Convolution(CoefficientFn),
    Custom(KernelFn),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::ConstantBand { value, radius } => {
                write!(f, "ConstantBand(value={value}, radius={radius})")
            }
            Kernel::TentBand { height, radius } => {
                write!(f, "TentBand(height={height}, radius={radius})")
            }
            Kernel::Table2d { xs, ys, cutoff, .. } => {
                write!(f, "Table2d({}x{}, cutoff={cutoff})", xs.len(), ys.len())
            }
            Kernel::Scaled { inner, factor } => write!(f, "Scaled({factor} * {inner:?})"),
            Kernel::Reflected { inner, pivot } => write!(f, "Reflected({inner:?}, pivot={pivot})"),
            Kernel::Convolution(_) => write!(f, "Convolution(..)"),
            Kernel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Kernel {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Kernel::Custom(Arc::new(f))
    }

    pub fn convolution<F>(profile: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Kernel::Convolution(Arc::new(profile))
    }

    pub fn from_kind(kind: &str, params: &[f64]) -> Result<Self> {
        match kind {
            "constant-band" | "tent-band" => {
                if params.len() != 2 {
                    return Err(Error::Parse(format!(
                        "kernel kind '{kind}' takes [value, radius], got {} parameters",
                        params.len()
                    )));
                }
                if params[1] <= 0.0 {
                    return Err(Error::Parse("kernel radius must be > 0".into()));
                }
                Ok(if kind == "constant-band" {
                    Kernel::ConstantBand {
                        value: params[0],
                        radius: params[1],
                    }
                } else {
                    Kernel::TentBand {
                        height: params[0],
                        radius: params[1],
                    }
                })
            }
            "table2d" => {
                // [nx, ny, cutoff, xs.., ys.., values..]
                if params.len() < 3 {
                    return Err(Error::Parse(
                        "table2d takes [nx, ny, cutoff, xs.., ys.., values..]".into(),
                    ));
                }
                let nx = params[0] as usize;
                let ny = params[1] as usize;
                if nx < 1 || ny < 1 || params[0].fract() != 0.0 || params[1].fract() != 0.0 {
                    return Err(Error::Parse(
                        "table2d sizes must be positive integers".into(),
                    ));
                }
                let expected = 3 + nx + ny + nx * ny;
                if params.len() != expected {
                    return Err(Error::Parse(format!(
                        "table2d with {nx}x{ny} nodes needs {expected} parameters, got {}",
                        params.len()
                    )));
                }
                let xs = params[3..3 + nx].to_vec();
                let ys = params[3 + nx..3 + nx + ny].to_vec();
                let values = params[3 + nx + ny..].to_vec();
                Self::table2d(xs, ys, values, params[2])
            }
            other => Err(Error::Parse(format!("unknown kernel kind '{other}'"))),
        }
    }

    pub fn table2d(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>, cutoff: f64) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::Parse(
                "table2d axes must be strictly increasing".into(),
            ));
        }
        if values.len() != xs.len() * ys.len() {
            return Err(Error::Parse(
                "table2d value count does not match axes".into(),
            ));
        }
        if cutoff <= 0.0 {
            return Err(Error::Parse("table2d cutoff must be > 0".into()));
        }
        Ok(Kernel::Table2d {
            xs,
            ys,
            values,
            cutoff,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::ConstantBand { value, radius } => {
                if in_band((x - y).abs(), *radius) {
                    *value
                } else {
                    0.0
                }
            }
            Kernel::TentBand { height, radius } => height * (1.0 - (x - y).abs() / radius).max(0.0),
            Kernel::Table2d {
                xs,
                ys,
                values,
                cutoff,
            } => {
                if !in_band((x - y).abs(), *cutoff) {
                    return 0.0;
                }
                bilinear(xs, ys, values, x, y)
            }
            Kernel::Scaled { inner, factor } => factor * inner.eval(x, y),
            Kernel::Reflected { inner, pivot } => inner.eval(pivot - x, pivot - y),
            Kernel::Convolution(p) => p(x - y),
            Kernel::Custom(f) => f(x, y),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Kernel::Scaled {
            inner: Box::new(self.clone()),
            factor,
        }
    }

    pub fn reflected(&self, pivot: f64) -> Self {
        match self {
            Kernel::Reflected { inner, pivot: p } if *p == pivot => (**inner).clone(),
            _ => Kernel::Reflected {
                inner: Box::new(self.clone()),
                pivot,
            },
        }
    }

    /// True when `J(x, y)` depends on `x - y` only, by construction.
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            Kernel::ConstantBand { .. } | Kernel::TentBand { .. } | Kernel::Convolution(_) => true,
            Kernel::Scaled { inner, .. } | Kernel::Reflected { inner, .. } => {
                inner.is_translation_invariant()
            }
            Kernel::Table2d { .. } | Kernel::Custom(_) => false,
        }
    }

    /// The profile `J0(z) = J(z, 0)` of a translation-invariant kernel.
    pub fn profile(&self, z: f64) -> f64 {
        self.eval(z, 0.0)
    }
}

fn bilinear(xs: &[f64], ys: &[f64], values: &[f64], x: f64, y: f64) -> f64 {
    let locate = |axis: &[f64], t: f64| -> (usize, usize, f64) {
        if axis.len() == 1 || t <= axis[0] {
            return (0, 0, 0.0);
        }
        let last = axis.len() - 1;
        if t >= axis[last] {
            return (last, last, 0.0);
        }
        let k = axis.partition_point(|v| *v <= t);
        let s = (t - axis[k - 1]) / (axis[k] - axis[k - 1]);
        (k - 1, k, s)
    };
    let (i0, i1, sx) = locate(xs, x);
    let (j0, j1, sy) = locate(ys, y);
    let ny = ys.len();
    let v = |i: usize, j: usize| values[i * ny + j];
    let lo = v(i0, j0) * (1.0 - sy) + v(i0, j1) * sy;
    let hi = v(i1, j0) * (1.0 - sy) + v(i1, j1) * sy;
    lo * (1.0 - sx) + hi * sx
}
