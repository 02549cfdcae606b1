//! Planar contour measurements: shoelace area, perimeter and the
//! monotone-chain convex hull.

use serde_json::Value;

use super::ToolError;

pub type Point = (f64, f64);

/// Reads a contour given as a list of `[x, y]` pairs or `(x, y)` tuples.
/// Also accepts OpenCV's `[[[x, y]], ...]` nesting.
pub fn parse_points(tool: &str, value: &Value) -> Result<Vec<(Point, Value)>, ToolError> {
    let bad = |msg: String| ToolError::Argument { tool: tool.to_string(), message: msg };
    let items = value
        .as_array()
        .ok_or_else(|| bad(format!("contour must be a list of [x, y] points, got {}", kind(value))))?;
    items
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut p = p;
            while let Some([inner]) = p.as_array().map(|a| a.as_slice()) {
                p = inner;
            }
            match p.as_array().map(|a| a.as_slice()) {
                Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                    (Some(fx), Some(fy)) if fx.is_finite() && fy.is_finite() => {
                        Ok(((fx, fy), Value::Array(vec![x.clone(), y.clone()])))
                    }
                    _ => Err(bad(format!("contour point {i} has non-numeric coordinates"))),
                },
                _ => Err(bad(format!("contour point {i} must be a pair [x, y]"))),
            }
        })
        .collect()
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "None",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "str",
        Value::Array(_) => "list",
        Value::Object(_) => "dict",
    }
}

/// Absolute area of the closed polygon. Self-intersections are not detected.
pub fn area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (x1, y1) = points[i];
        let (x2, y2) = points[(i + 1) % n];
        twice += x1 * y2 - x2 * y1;
    }
    twice.abs() / 2.0
}

/// Sum of edge lengths, including the closing edge.
pub fn perimeter(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (x1, y1) = points[i];
            let (x2, y2) = points[(i + 1) % n];
            (x2 - x1).hypot(y2 - y1)
        })
        .sum()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Indices of the hull vertices in counter-clockwise order, starting at the
/// lexicographically smallest point. Collinear boundary points and duplicates
/// are dropped; all-collinear input yields its two endpoints.
pub fn convex_hull(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap().then(a.cmp(&b)));
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(idx.len() + 1);
    for pass in [idx.clone(), idx.iter().rev().copied().collect()] {
        let floor = hull.len();
        for i in pass {
            while hull.len() >= floor + 2
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [Point; 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

    #[test]
    fn unit_square() {
        assert_eq!(area(&SQUARE), 1.0);
        assert_eq!(perimeter(&SQUARE), 4.0);
    }

    #[test]
    fn triangles() {
        assert_eq!(area(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]), 6.0);
        assert_eq!(perimeter(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]), 12.0);
    }

    #[test]
    fn orientation_does_not_matter() {
        let mut cw = SQUARE.to_vec();
        cw.reverse();
        assert_eq!(area(&cw), 1.0);
    }

    #[test]
    fn hull_drops_interior_point() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 2.0)];
        let hull: Vec<Point> = convex_hull(&pts).into_iter().map(|i| pts[i]).collect();
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
    }

    #[test]
    fn hull_collinear_and_tiny() {
        let pts = [(3.0, 3.0), (1.0, 1.0), (2.0, 2.0), (0.0, 0.0)];
        assert_eq!(convex_hull(&pts), vec![3, 0]);
        assert_eq!(convex_hull(&[(5.0, 5.0)]), vec![0]);
        assert_eq!(convex_hull(&[(1.0, 1.0), (1.0, 1.0)]), vec![0]);
        assert!(convex_hull(&[]).is_empty());
    }

    #[test]
    fn hull_skips_collinear_edge_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (0.0, 1.0)];
        let hull: Vec<Point> = convex_hull(&pts).into_iter().map(|i| pts[i]).collect();
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
    }

    #[test]
    fn parses_nested_and_tuple_forms() {
        let v: Value = serde_json::json!([[[0, 0]], [[4, 0]], [[0, 3]]]);
        let pts = parse_points("t", &v).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[1].0, (4.0, 0.0));
        assert!(parse_points("t", &serde_json::json!([[0, 0, 1]])).is_err());
        assert!(parse_points("t", &serde_json::json!("abc")).is_err());
    }
}
