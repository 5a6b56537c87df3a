use super::{GeometryError, GridFunction, GridSpec, TildeMap};
use crate::genfun::{GenFun, PhasePoint};
use std::collections::HashMap;

/// Which coordinates a polygon is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateTag {
    Raw,
    Tilde,
}

/// Sublevel set `{u < g(·, y₀, z₀ − h)}` of a grid function.
#[derive(Debug, Clone)]
pub struct Section {
    pub x0: [f64; 2],
    pub y0: Vec<f64>,
    pub z0: f64,
    pub h: f64,
    pub spec: GridSpec,
    /// Pointwise `u < g_h` at every node.
    pub mask: Vec<bool>,
    /// Nodes of the connected component of `mask` containing `x₀`.
    pub component: Vec<bool>,
    /// `u − g(·, y₀, z_h)` at every node.
    pub phi: Vec<f64>,
    /// Counter-clockwise boundary polygon of the component.
    pub boundary: Vec<[f64; 2]>,
    pub tag: CoordinateTag,
}

impl Section {
    pub fn z_h(&self) -> f64 {
        self.z0 - self.h
    }

    /// Polygon area in the section's coordinates.
    pub fn area(&self) -> f64 {
        polygon_area(&self.boundary)
    }

    /// `∫_{S_h} f dx` with a one-cell smoothed indicator: nodes within half a
    /// cell of the zero level set get a fractional weight from the signed
    /// distance `φ/|∇φ|`.
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        let s = &self.spec;
        let hg = s.spacing;
        let mut acc = 0.0;
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                let k = s.index(i, j);
                if !self.near_component(i, j) {
                    continue;
                }
                let gx = (self.phi[k + 1] - self.phi[k - 1]) / (2.0 * hg);
                let gy = (self.phi[k + s.nx] - self.phi[k - s.nx]) / (2.0 * hg);
                let grad = gx.hypot(gy);
                let w = if grad > 0.0 {
                    (0.5 - self.phi[k] / grad / hg).clamp(0.0, 1.0)
                } else if self.phi[k] < 0.0 {
                    1.0
                } else {
                    0.0
                };
                if w > 0.0 {
                    acc += w * f(s.point(i, j));
                }
            }
        }
        acc * hg * hg
    }

    /// Lebesgue measure by the smoothed indicator (agrees with
    /// [`Section::area`] to second order in the grid spacing).
    pub fn measure(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// A node in the component or adjacent to it.
    fn near_component(&self, i: usize, j: usize) -> bool {
        let s = &self.spec;
        (j.saturating_sub(1)..=(j + 1).min(s.ny - 1))
            .any(|jj| (i.saturating_sub(1)..=(i + 1).min(s.nx - 1)).any(|ii| self.component[s.index(ii, jj)]))
    }

    /// `sup_{S_h} (g_h − u)` over component nodes.
    pub fn depth(&self) -> f64 {
        self.phi.iter().zip(&self.component).filter(|(_, &c)| c).fold(0.0f64, |m, (p, _)| m.max(-p))
    }

    /// Boundary polygon mapped to `x̃` coordinates (re-oriented
    /// counter-clockwise).
    pub fn boundary_tilde(&self, gf: &GenFun) -> Result<Vec<[f64; 2]>, GeometryError> {
        let m = TildeMap::new(gf, &self.y0, self.z_h());
        let mut out = Vec::with_capacity(self.boundary.len());
        for p in &self.boundary {
            let t = m.forward(p)?;
            out.push([t[0], t[1]]);
        }
        if polygon_area(&out) < 0.0 {
            out.reverse();
        }
        Ok(out)
    }

    /// Copy of the section whose polygon is in `x̃` coordinates.
    pub fn in_tilde(&self, gf: &GenFun) -> Result<Section, GeometryError> {
        let mut s = self.clone();
        s.boundary = self.boundary_tilde(gf)?;
        s.tag = CoordinateTag::Tilde;
        Ok(s)
    }
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        acc += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * acc
}

pub(crate) fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < xc {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Section at `x₀` with the support found from the interpolated value and
/// gradient of `u` through the `(y, z)` solve.
pub fn section(u: &GridFunction, gf: &GenFun, x0: [f64; 2], h: f64) -> Result<Section, GeometryError> {
    if gf.n() != 2 {
        return Err(GeometryError::UnsupportedDimension { n: gf.n() });
    }
    let (u0, du) = u.interpolate_with_gradient(x0)?;
    let (y0, z0) = gf.solve_yz(&PhasePoint::new(x0.to_vec(), u0, du.to_vec()), None)?;
    section_with_support(u, gf, x0, &y0, z0, h)
}

/// Section for a known support `(y₀, z₀)`.
pub fn section_with_support(
    u: &GridFunction,
    gf: &GenFun,
    x0: [f64; 2],
    y0: &[f64],
    z0: f64,
    h: f64,
) -> Result<Section, GeometryError> {
    if gf.n() != 2 {
        return Err(GeometryError::UnsupportedDimension { n: gf.n() });
    }
    if !(h > 0.0) {
        return Err(GeometryError::DegenerateInput { what: format!("section height {h} is not positive") });
    }
    let s = u.spec;
    let z_h = z0 - h;
    let mut phi = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let p = s.point_k(k);
        phi.push(u.values[k] - gf.g(&p, y0, z_h)?);
    }
    let mask: Vec<bool> = phi.iter().map(|&v| v < 0.0).collect();
    let start = nearest_inside(&s, &mask, x0).ok_or(GeometryError::BaseOutsideSection { x0 })?;
    let component = flood(&s, &mask, start);
    for j in 0..s.ny {
        for i in 0..s.nx {
            if s.on_edge(i, j) && component[s.index(i, j)] {
                return Err(GeometryError::SectionTouchesBoundary { h });
            }
        }
    }
    let boundary = extract_loop(&s, &phi, x0).ok_or(GeometryError::BaseOutsideSection { x0 })?;
    Ok(Section { x0, y0: y0.to_vec(), z0, h, spec: s, mask, component, phi, boundary, tag: CoordinateTag::Raw })
}

/// The inside node among the four corners of the cell holding `x₀`
/// closest to it.
fn nearest_inside(s: &GridSpec, mask: &[bool], x0: [f64; 2]) -> Option<usize> {
    let fi = ((x0[0] - s.origin[0]) / s.spacing).floor();
    let fj = ((x0[1] - s.origin[1]) / s.spacing).floor();
    if fi < 0.0 || fj < 0.0 {
        return None;
    }
    let (i0, j0) = ((fi as usize).min(s.nx - 2), (fj as usize).min(s.ny - 2));
    let mut best: Option<(f64, usize)> = None;
    for (i, j) in [(i0, j0), (i0 + 1, j0), (i0, j0 + 1), (i0 + 1, j0 + 1)] {
        let k = s.index(i, j);
        if mask[k] {
            let p = s.point(i, j);
            let d = (p[0] - x0[0]).hypot(p[1] - x0[1]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, k));
            }
        }
    }
    best.map(|(_, k)| k)
}

fn flood(s: &GridSpec, mask: &[bool], start: usize) -> Vec<bool> {
    let mut seen = vec![false; s.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(k) = stack.pop() {
        let (i, j) = s.ij(k);
        let mut push = |ii: usize, jj: usize| {
            let kk = s.index(ii, jj);
            if mask[kk] && !seen[kk] {
                seen[kk] = true;
                stack.push(kk);
            }
        };
        if i > 0 {
            push(i - 1, j);
        }
        if i + 1 < s.nx {
            push(i + 1, j);
        }
        if j > 0 {
            push(i, j - 1);
        }
        if j + 1 < s.ny {
            push(i, j + 1);
        }
    }
    seen
}

/// Marching squares on `φ < 0` with linear interpolation along cell edges.
/// Segments are oriented with the inside on the left; saddles are resolved
/// by the cell-centre average. Returns the smallest closed loop enclosing
/// `x₀`.
fn extract_loop(s: &GridSpec, phi: &[f64], x0: [f64; 2]) -> Option<Vec<[f64; 2]>> {
    // Edge keys: 2k for (i,j)-(i+1,j), 2k+1 for (i,j)-(i,j+1), k = index(i,j).
    let mut next: HashMap<usize, (usize, [f64; 2])> = HashMap::new();
    for j in 0..s.ny - 1 {
        for i in 0..s.nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = corners.iter().map(|&(a, b)| phi[s.index(a, b)]).collect();
            let inside: Vec<bool> = v.iter().map(|&t| t < 0.0).collect();
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let edge_key = [2 * s.index(i, j), 2 * s.index(i + 1, j) + 1, 2 * s.index(i, j + 1), 2 * s.index(i, j) + 1];
            // (key, point, is_start) in counter-clockwise edge order.
            let mut crossings = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if inside[a] != inside[b] {
                    let t = v[a] / (v[a] - v[b]);
                    let pa = s.point(corners[a].0, corners[a].1);
                    let pb = s.point(corners[b].0, corners[b].1);
                    let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                    crossings.push((edge_key[e], p, inside[a]));
                }
            }
            let centre_inside = v.iter().sum::<f64>() / 4.0 < 0.0;
            let m = crossings.len();
            for c in 0..m {
                let (key, p, is_start) = crossings[c];
                if !is_start {
                    continue;
                }
                let partner = if centre_inside || m == 2 { (c + 1) % m } else { (c + m - 1) % m };
                next.insert(key, (crossings[partner].0, p));
            }
        }
    }
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
    let keys: Vec<usize> = {
        let mut k: Vec<usize> = next.keys().copied().collect();
        k.sort_unstable();
        k
    };
    for &k0 in &keys {
        if visited.contains_key(&k0) {
            continue;
        }
        let mut poly = Vec::new();
        let mut k = k0;
        let mut closed = false;
        while let Some(&(nk, p)) = next.get(&k) {
            if visited.insert(k, true).is_some() {
                break;
            }
            poly.push(p);
            k = nk;
            if k == k0 {
                closed = true;
                break;
            }
        }
        if !closed || poly.len() < 3 || !point_in_polygon(x0, &poly) {
            continue;
        }
        let a = polygon_area(&poly).abs();
        if best.as_ref().is_none_or(|(ba, _)| a < *ba) {
            best = Some((a, poly));
        }
    }
    best.map(|(_, mut p)| {
        if polygon_area(&p) < 0.0 {
            p.reverse();
        }
        p
    })
}
