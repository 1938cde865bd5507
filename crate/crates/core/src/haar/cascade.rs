//! Reader for the public Haar cascade XML layout.
//!
//! Both the current `opencv-cascade-classifier` layout (stages reference a
//! shared feature table) and the legacy `opencv-haar-classifier` layout
//! (features inline in each tree) are accepted. Only depth-one trees
//! (stumps) and upright features are supported.

use roxmltree::{Document, Node};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub weight: f64,
}

impl WeightedRect {
    pub fn area(&self) -> f64 {
        f64::from(self.width) * f64::from(self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
}

/// Weak classifier: `left` if the normalized feature value is below
/// `threshold`, `right` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStage {
    pub stumps: Vec<Stump>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub window_width: u32,
    pub window_height: u32,
    pub stages: Vec<CascadeStage>,
    pub features: Vec<HaarFeature>,
    /// Stage count the document itself declares, when it declares one.
    pub declared_stages: Option<usize>,
}

impl Cascade {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }
}

fn err_at(doc: &Document<'_>, node: Node<'_, '_>, message: impl Into<String>) -> Error {
    let pos = doc.text_pos_at(node.range().start);
    Error::Parse { line: pos.row, column: pos.col, message: message.into() }
}

fn child<'a, 'input>(doc: &Document<'input>, node: Node<'a, 'input>, name: &str) -> Result<Node<'a, 'input>> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or_else(|| err_at(doc, node, format!("<{}> lacks <{name}>", node.tag_name().name())))
}

fn opt_child<'a, 'input>(node: Node<'a, 'input>, name: &str) -> Option<Node<'a, 'input>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn items<'a, 'input>(node: Node<'a, 'input>) -> impl Iterator<Item = Node<'a, 'input>> {
    node.children().filter(|c| c.has_tag_name("_"))
}

fn numbers(doc: &Document<'_>, node: Node<'_, '_>) -> Result<Vec<f64>> {
    node.text()
        .unwrap_or("")
        .split_ascii_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| err_at(doc, node, format!("expected a number, found {tok:?}"))))
        .collect()
}

fn number(doc: &Document<'_>, node: Node<'_, '_>) -> Result<f64> {
    match numbers(doc, node)?.as_slice() {
        [v] => Ok(*v),
        other => Err(err_at(
            doc,
            node,
            format!("<{}> should hold one number, found {}", node.tag_name().name(), other.len()),
        )),
    }
}

fn parse_rects(doc: &Document<'_>, rects: Node<'_, '_>) -> Result<Vec<WeightedRect>> {
    items(rects)
        .map(|r| {
            let v = numbers(doc, r)?;
            if v.len() != 5 {
                return Err(err_at(doc, r, "rect needs x y w h weight"));
            }
            if v[..4].iter().any(|&c| c < 0.0 || c.fract() != 0.0) {
                return Err(err_at(doc, r, "rect coordinates must be non-negative integers"));
            }
            Ok(WeightedRect { x: v[0] as u32, y: v[1] as u32, width: v[2] as u32, height: v[3] as u32, weight: v[4] })
        })
        .collect()
}

fn check_feature(
    doc: &Document<'_>,
    node: Node<'_, '_>,
    index: usize,
    feature: &HaarFeature,
    win_w: u32,
    win_h: u32,
) -> Result<()> {
    if !(2..=3).contains(&feature.rects.len()) {
        return Err(err_at(doc, node, format!("feature {index} has {} rects, expected 2 or 3", feature.rects.len())));
    }
    for r in &feature.rects {
        if r.x + r.width > win_w || r.y + r.height > win_h {
            return Err(err_at(doc, node, format!("feature {index} rect {r:?} leaves the {win_w}x{win_h} window")));
        }
    }
    Ok(())
}

fn is_tilted(doc: &Document<'_>, node: Node<'_, '_>) -> Result<bool> {
    match opt_child(node, "tilted") {
        Some(t) => Ok(number(doc, t)? != 0.0),
        None => Ok(false),
    }
}

/// Parse a cascade document.
pub fn parse_cascade(document: &str) -> Result<Cascade> {
    let doc = Document::parse(document).map_err(|e| {
        let pos = e.pos();
        Error::Parse { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    let cascade = root
        .children()
        .find(|n| n.is_element())
        .ok_or_else(|| err_at(&doc, root, "document holds no cascade element"))?;

    match cascade.attribute("type_id") {
        Some("opencv-haar-classifier") => parse_legacy(&doc, cascade),
        _ => parse_current(&doc, cascade),
    }
}

fn parse_current(doc: &Document<'_>, cascade: Node<'_, '_>) -> Result<Cascade> {
    if let Some(ft) = opt_child(cascade, "featureType") {
        let kind = ft.text().unwrap_or("").trim();
        if kind != "HAAR" {
            return Err(Error::Unsupported(format!("feature type {kind:?}")));
        }
    }
    let win_w = number(doc, child(doc, cascade, "width")?)? as u32;
    let win_h = number(doc, child(doc, cascade, "height")?)? as u32;
    let declared_stages = match opt_child(cascade, "stageNum") {
        Some(n) => Some(number(doc, n)? as usize),
        None => None,
    };

    let feature_nodes: Vec<_> = items(child(doc, cascade, "features")?).collect();
    let mut features = Vec::with_capacity(feature_nodes.len());
    for (index, node) in feature_nodes.iter().enumerate() {
        if is_tilted(doc, *node)? {
            return Err(Error::Unsupported(format!(
                "feature {index} is tilted (45 degree features are not implemented)"
            )));
        }
        let feature = HaarFeature { rects: parse_rects(doc, child(doc, *node, "rects")?)? };
        check_feature(doc, *node, index, &feature, win_w, win_h)?;
        features.push(feature);
    }

    let mut stages = Vec::new();
    for stage_node in items(child(doc, cascade, "stages")?) {
        let threshold = number(doc, child(doc, stage_node, "stageThreshold")?)?;
        let mut stumps = Vec::new();
        for weak in items(child(doc, stage_node, "weakClassifiers")?) {
            let nodes_el = child(doc, weak, "internalNodes")?;
            let nodes = numbers(doc, nodes_el)?;
            let leaves = numbers(doc, child(doc, weak, "leafValues")?)?;
            if nodes.len() != 4 || leaves.len() != 2 {
                return Err(Error::Unsupported(format!(
                    "weak classifier with {} internal values; only stumps are supported",
                    nodes.len()
                )));
            }
            let feature = nodes[2] as usize;
            if nodes[2] < 0.0 || feature >= features.len() {
                return Err(err_at(doc, nodes_el, format!("feature index {} out of range", nodes[2])));
            }
            stumps.push(Stump { feature, threshold: nodes[3], left: leaves[0], right: leaves[1] });
        }
        stages.push(CascadeStage { stumps, threshold });
    }

    Ok(Cascade { window_width: win_w, window_height: win_h, stages, features, declared_stages })
}

fn parse_legacy(doc: &Document<'_>, cascade: Node<'_, '_>) -> Result<Cascade> {
    let size_el = child(doc, cascade, "size")?;
    let size = numbers(doc, size_el)?;
    if size.len() != 2 {
        return Err(err_at(doc, size_el, "<size> needs width and height"));
    }
    let (win_w, win_h) = (size[0] as u32, size[1] as u32);

    let mut features = Vec::new();
    let mut stages = Vec::new();
    for stage_node in items(child(doc, cascade, "stages")?) {
        let threshold = number(doc, child(doc, stage_node, "stage_threshold")?)?;
        let mut stumps = Vec::new();
        for tree in items(child(doc, stage_node, "trees")?) {
            let nodes: Vec<_> = items(tree).collect();
            if nodes.len() != 1 {
                return Err(Error::Unsupported(format!("tree with {} nodes; only stumps are supported", nodes.len())));
            }
            let node = nodes[0];
            let feature_el = child(doc, node, "feature")?;
            let index = features.len();
            if is_tilted(doc, feature_el)? {
                return Err(Error::Unsupported(format!(
                    "feature {index} is tilted (45 degree features are not implemented)"
                )));
            }
            let feature = HaarFeature { rects: parse_rects(doc, child(doc, feature_el, "rects")?)? };
            check_feature(doc, feature_el, index, &feature, win_w, win_h)?;
            features.push(feature);
            stumps.push(Stump {
                feature: index,
                threshold: number(doc, child(doc, node, "threshold")?)?,
                left: number(doc, child(doc, node, "left_val")?)?,
                right: number(doc, child(doc, node, "right_val")?)?,
            });
        }
        stages.push(CascadeStage { stumps, threshold });
    }

    Ok(Cascade { window_width: win_w, window_height: win_h, declared_stages: Some(stages.len()), stages, features })
}
