use super::{good_shape, min_ellipsoid, section, GeometryError, GridFunction, TildeMap};
use crate::genfun::GenFun;

/// One row of the section-estimate table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub h: f64,
    /// `|S_h|` (polygon area, raw coordinates).
    pub area: f64,
    /// `ν(S_h) = ∫_{S_h} f`.
    pub nu: f64,
    /// `sup_{S_h}(g_h − u)`.
    pub depth: f64,
    /// Semi-axes of the minimum ellipse in `x̃` coordinates.
    pub r1: f64,
    pub rn: f64,
    /// `hⁿ / (|S_h| ν(S_h))`.
    pub volume_ratio: f64,
    /// `hⁿ / (λ |S_h|²)`.
    pub lambda_ratio: f64,
    /// `h^{n/2} / (r₁⋯rₙ)`.
    pub axes_ratio: f64,
    /// `h r₁² / rₙ²`.
    pub shape_ratio: f64,
    pub good_shape_tilde: f64,
    pub good_shape_raw: f64,
    /// Largest singular-value ratio of the `x̃` chart along the boundary.
    pub chart_distortion: f64,
}

impl EstimateRow {
    pub const HEADER: [&'static str; 13] = [
        "h",
        "area",
        "nu",
        "depth",
        "r1",
        "rn",
        "volume_ratio",
        "lambda_ratio",
        "axes_ratio",
        "shape_ratio",
        "good_shape_tilde",
        "good_shape_raw",
        "chart_distortion",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.h,
            self.area,
            self.nu,
            self.depth,
            self.r1,
            self.rn,
            self.volume_ratio,
            self.lambda_ratio,
            self.axes_ratio,
            self.shape_ratio,
            self.good_shape_tilde,
            self.good_shape_raw,
            self.chart_distortion,
        ]
    }
}

/// Table over `h` plus drift flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionEstimates {
    pub rows: Vec<EstimateRow>,
    /// Names of ratios that drift monotonically by more than a factor 10.
    pub unbounded: Vec<&'static str>,
}

impl SectionEstimates {
    /// `max/min` of a ratio column.
    pub fn spread(&self, pick: impl Fn(&EstimateRow) -> f64) -> f64 {
        let (lo, hi) = self.rows.iter().map(&pick).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        hi / lo
    }
}

/// Monotone drift by more than 10× along increasing `h`. One-sided ratios
/// only count growth as `h` decreases.
fn drifts(values: &[f64], one_sided: bool) -> bool {
    if values.len() < 2 {
        return false;
    }
    let up = !one_sided && values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    (up || down) && hi > 10.0 * lo
}

/// Section-volume, ellipsoid and shape ratios for each height in `h_list`,
/// with density `f` bounded by `bounds = (λ, Λ)`.
pub fn verify_section_estimates(
    u: &GridFunction,
    gf: &GenFun,
    x0: [f64; 2],
    h_list: &[f64],
    f: &(dyn Fn([f64; 2]) -> f64 + Sync),
    bounds: (f64, f64),
) -> Result<SectionEstimates, GeometryError> {
    let n = gf.n() as i32;
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let s = section(u, gf, x0, h)?;
        let area = s.area();
        let nu = s.integrate(f);
        let tilde = s.boundary_tilde(gf)?;
        let et = min_ellipsoid(&tilde.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
        let er = min_ellipsoid(&s.boundary.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
        let (r1, rn) = (et.semi_axes[0], et.semi_axes[et.n() - 1]);
        let chart = TildeMap::new(gf, &s.y0, s.z_h());
        let mut chart_distortion = 1.0f64;
        for p in s.boundary.iter().step_by((s.boundary.len() / 64).max(1)) {
            let sv = chart.jacobian(p)?.singular_values();
            let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
            chart_distortion = chart_distortion.max(hi / lo);
        }
        rows.push(EstimateRow {
            h,
            area,
            nu,
            depth: s.depth(),
            r1,
            rn,
            volume_ratio: h.powi(n) / (area * nu),
            lambda_ratio: h.powi(n) / (bounds.0 * area * area),
            axes_ratio: h.powf(n as f64 / 2.0) / et.axes_product(),
            shape_ratio: h * r1 * r1 / (rn * rn),
            good_shape_tilde: good_shape(&et),
            good_shape_raw: good_shape(&er),
            chart_distortion,
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.h.total_cmp(&b.h));
    let col = |k: usize| sorted.iter().map(|r| r.values()[k]).collect::<Vec<_>>();
    let mut unbounded = Vec::new();
    for (k, name, one_sided) in
        [(6, "volume_ratio", false), (7, "lambda_ratio", false), (8, "axes_ratio", false), (9, "shape_ratio", true)]
    {
        let span = sorted.last().map(|r| r.h).unwrap_or(1.0) / sorted.first().map(|r| r.h).unwrap_or(1.0);
        if span >= 99.0 && drifts(&col(k), one_sided) {
            unbounded.push(name);
        }
    }
    Ok(SectionEstimates { rows, unbounded })
}
