//! The bundled 49-tool catalog. Geometry tools run for real; everything else
//! answers from a [`FixtureStore`].

use std::sync::Arc;

use serde_json::{json, Value};

use super::descriptor::{Category, ParamSpec, ParamType, ToolDescriptor};
use super::fixtures::FixtureStore;
use super::geometry;
use super::registry::{ToolArgs, ToolBinding, ToolError, ToolRegistry};

const CATALOG: &str = include_str!("../../assets/tools.json");

pub const GEOMETRY_TOOLS: [&str; 3] = ["get_contour_area", "get_contour_perimeter", "get_contour_convex_hull"];

pub fn descriptors() -> Vec<ToolDescriptor> {
    serde_json::from_str(CATALOG).expect("bundled tool catalog is valid")
}

pub fn descriptor(name: &str) -> Option<ToolDescriptor> {
    descriptors().into_iter().find(|d| d.name == name)
}

fn contour_arg(tool: &str, args: &ToolArgs) -> Result<Vec<geometry::Point>, ToolError> {
    Ok(geometry::parse_points(tool, &args["contour"])?.into_iter().map(|(p, _)| p).collect())
}

fn polygon_arg(tool: &str, args: &ToolArgs) -> Result<Vec<geometry::Point>, ToolError> {
    let pts = contour_arg(tool, args)?;
    if pts.len() < 3 {
        return Err(ToolError::DegenerateContour(format!(
            "{tool} needs at least 3 points, got {}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// The real implementation behind a geometry tool descriptor.
pub fn geometry_binding(d: ToolDescriptor) -> Option<ToolBinding> {
    let binding = match d.name.as_str() {
        "get_contour_area" => ToolBinding::new(d, |args, _| {
            let pts = polygon_arg("get_contour_area", args)?;
            Ok(json!({ "contour_area": geometry::area(&pts) }))
        }),
        "get_contour_perimeter" => ToolBinding::new(d, |args, _| {
            let pts = polygon_arg("get_contour_perimeter", args)?;
            Ok(json!({ "contour_perimeter": geometry::perimeter(&pts) }))
        }),
        "get_contour_convex_hull" => ToolBinding::new(d, |args, _| {
            let parsed = geometry::parse_points("get_contour_convex_hull", &args["contour"])?;
            let pts: Vec<_> = parsed.iter().map(|(p, _)| *p).collect();
            let hull: Vec<Value> = geometry::convex_hull(&pts).into_iter().map(|i| parsed[i].1.clone()).collect();
            Ok(json!({ "contour_convex_hull": hull }))
        }),
        _ => return None,
    };
    Some(binding)
}

fn fixture_binding(d: ToolDescriptor, store: Option<Arc<FixtureStore>>) -> ToolBinding {
    let name = d.name.clone();
    let source = store.as_ref().and_then(|s| s.source_for(&name));
    let mut b = ToolBinding::new(d, move |args, ctx| match &store {
        Some(s) => s.lookup(&name, args, ctx),
        None => Err(ToolError::FixtureMiss { tool: name.clone(), key: "(no fixture store configured)".into() }),
    });
    b.fixture_source = source;
    b
}

/// All 49 catalog tools in catalog order.
pub fn full_registry(store: Option<Arc<FixtureStore>>) -> ToolRegistry {
    let mut reg = ToolRegistry::new();
    for d in descriptors() {
        let b = match geometry_binding(d.clone()) {
            Some(b) => b,
            None => fixture_binding(d, store.clone()),
        };
        reg.register(b).expect("catalog names are unique");
    }
    reg
}

/// Placeholder for the interactive web-search slot. Always reports that
/// search is unavailable.
pub fn web_search_stub() -> ToolBinding {
    let d = ToolDescriptor {
        name: "web_search".into(),
        category: Category::WebSearch,
        description: "Search the web. Not available in this deployment; calls return an error.".into(),
        notes: vec![],
        prerequisites: vec![],
        params: vec![ParamSpec {
            name: "query".into(),
            ty: ParamType::Str,
            required: true,
            default: None,
            doc: "Search terms.".into(),
        }],
        returns: vec!["results".into()],
        returns_doc: String::new(),
    };
    let mut b = ToolBinding::new(d, |_, _| {
        Err(ToolError::Failed { tool: "web_search".into(), message: "web search is not available".into() })
    });
    b.deterministic = true;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn catalog_has_49_tools_in_every_category() {
        let d = descriptors();
        assert_eq!(d.len(), 49);
        let mut counts = BTreeMap::new();
        for t in &d {
            *counts.entry(t.category).or_insert(0) += 1;
            for p in &t.params {
                assert!(!p.doc.is_empty(), "{}.{}", t.name, p.name);
            }
        }
        assert_eq!(counts[&Category::HistologyRoi], 4);
        assert_eq!(counts[&Category::DatasetCheck], 5);
        assert_eq!(counts[&Category::DatasetPipeline], 5);
        assert_eq!(counts[&Category::DocsRetriever], 3);
        assert_eq!(counts[&Category::NucleiContour], 4);
        assert_eq!(counts[&Category::WsiAnalysis], 25);
        assert_eq!(counts[&Category::WsiClassification], 3);
    }

    #[test]
    fn segmentation_tool_returns_seven_keys() {
        let d = descriptor("dataset_of_wsi_tissue_segmentation_tool").unwrap();
        assert_eq!(
            d.returns,
            [
                "dir_with_geojson_contours",
                "dir_with_tissue_contours_jpg",
                "dir_with_slide_thumbnails",
                "tissue_segmentation_log_file",
                "tissue_segmentation_config_file",
                "number_of_processed_segmentations",
                "operation_log"
            ]
        );
        assert_eq!(d.params.len(), 12);
    }
}
