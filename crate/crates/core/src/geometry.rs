//! Positions, polygon-area density estimates, and the interference
//! footprint of a cooperative group.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("area must be strictly positive")]
    ZeroArea,
    #[error("node density must be strictly positive")]
    ZeroDensity,
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "positions must be finite");
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Free-space propagation factor and the SU interference limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Frequency-dependent free-space path-loss constant (dimensionless
    /// numerator of `c / d^2`).
    pub fsp_constant: f64,
    /// Interference power limit of secondary nodes, in watts.
    pub interference_limit: f64,
}

impl PropagationConfig {
    pub fn new(fsp_constant: f64, interference_limit: f64) -> Self {
        assert!(fsp_constant > 0.0, "FSP constant must be positive");
        assert!(interference_limit > 0.0, "interference limit must be positive");
        Self {
            fsp_constant,
            interference_limit,
        }
    }
}

/// Flow and node densities derived from the two-hop neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    /// Flows per square meter.
    pub flow_density: f64,
    /// Nodes per square meter.
    pub node_density: f64,
    /// Rough flows-per-node ratio (`flow_density / node_density`, 0 when
    /// no nodes are known).
    pub flows_per_node: f64,
}

impl DensityEstimate {
    pub fn new(flow_density: f64, node_density: f64) -> Self {
        let flows_per_node = if node_density > 0.0 {
            flow_density / node_density
        } else {
            0.0
        };
        Self {
            flow_density,
            node_density,
            flows_per_node,
        }
    }
}

/// Convex-hull area of a point set (monotone chain + shoelace).
///
/// Fewer than three non-collinear points cannot enclose an area; the
/// documented degenerate rule falls back to the node's own transmission
/// disk, `pi * fallback_radius^2`, so density estimates stay finite.
pub fn hull_area(points: &[Position], fallback_radius: f64) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return std::f64::consts::PI * fallback_radius * fallback_radius;
    }
    let mut twice_area = 0.0;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        twice_area += a.x * b.y - b.x * a.y;
    }
    let area = twice_area.abs() / 2.0;
    if area == 0.0 {
        std::f64::consts::PI * fallback_radius * fallback_radius
    } else {
        area
    }
}

fn convex_hull(points: &[Position]) -> Vec<Position> {
    let mut pts: Vec<Position> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: &Position, a: &Position, b: &Position| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Position> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Position> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Flow density: distinguished flows per unit area.
pub fn flow_density(distinct_flows: usize, area: f64) -> Result<f64, GeometryError> {
    if area <= 0.0 {
        return Err(GeometryError::ZeroArea);
    }
    Ok(distinct_flows as f64 / area)
}

/// Effective interference radius of a cooperative group, collapsed to a
/// virtual center node under the worst-case coherent-sum model:
/// `sqrt(c * P_T * sum_i |w_i|^2 / P_int)`.
pub fn interference_radius(weight_power_sum: f64, p_t: f64, prop: &PropagationConfig) -> f64 {
    assert!(weight_power_sum > 0.0 && p_t > 0.0);
    (prop.fsp_constant * p_t * weight_power_sum / prop.interference_limit).sqrt()
}

/// Expected number of on-going flows inside the interference disk,
/// `D_f * pi * d_r^2`, kept real-valued.
pub fn estimate_affected_flows(flow_density: f64, radius: f64) -> f64 {
    assert!(flow_density >= 0.0 && radius >= 0.0);
    flow_density * std::f64::consts::PI * radius * radius
}

/// Flows-per-node ratio `F_n = D_f / D_n`.
pub fn flows_per_node(flow_density: f64, node_density: f64) -> Result<f64, GeometryError> {
    if node_density <= 0.0 {
        return Err(GeometryError::ZeroDensity);
    }
    Ok(flow_density / node_density)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Position {
        Position::new(x, y)
    }

    #[test]
    fn hull_area_unit_square() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        assert!((hull_area(&pts, 10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hull_area_triangle() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!((hull_area(&pts, 10.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hull_area_degenerate_falls_back_to_disk() {
        let disk = std::f64::consts::PI * 125.0 * 125.0;
        assert!((hull_area(&[p(0.0, 0.0), p(5.0, 5.0)], 125.0) - disk).abs() < 1e-9);
        let collinear = [p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)];
        assert!((hull_area(&collinear, 125.0) - disk).abs() < 1e-9);
    }

    #[test]
    fn hull_area_interior_points_ignored() {
        let pts = [
            p(0.0, 0.0),
            p(2.0, 0.0),
            p(2.0, 2.0),
            p(0.0, 2.0),
            p(1.0, 1.0),
        ];
        assert!((hull_area(&pts, 10.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn flow_density_examples() {
        assert_eq!(flow_density(4, 2.0).unwrap(), 2.0);
        assert_eq!(flow_density(0, 3.0).unwrap(), 0.0);
        assert_eq!(flow_density(3, 1.5).unwrap(), 2.0);
        assert_eq!(flow_density(1, 0.0), Err(GeometryError::ZeroArea));
    }

    #[test]
    fn interference_radius_examples() {
        let prop = PropagationConfig::new(1.0, 1.0);
        assert!((interference_radius(1.0, 1.0, &prop) - 1.0).abs() < 1e-12);
        // Quartering the limit doubles the radius.
        let quartered = PropagationConfig::new(1.0, 0.25);
        assert!((interference_radius(1.0, 1.0, &quartered) - 2.0).abs() < 1e-12);
        let other = PropagationConfig::new(2.0, 0.5);
        assert!((interference_radius(1.0, 1.0, &other) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affected_flows_examples() {
        assert!((estimate_affected_flows(2.0, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(estimate_affected_flows(0.0, 7.0), 0.0);
        assert!(
            (estimate_affected_flows(1.0 / std::f64::consts::PI, 2.0) - 4.0).abs() < 1e-12
        );
    }

    #[test]
    fn flows_per_node_examples() {
        assert_eq!(flows_per_node(2.0, 4.0).unwrap(), 0.5);
        assert_eq!(flows_per_node(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(flows_per_node(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(flows_per_node(1.0, 0.0), Err(GeometryError::ZeroDensity));
    }
}
