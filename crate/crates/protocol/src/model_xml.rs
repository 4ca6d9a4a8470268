//! Loader for the model-XML subset accepted by `spawn_model`.
//!
//! Grammar (elements in this order is not required; unknown elements are rejected):
//!
//! ```xml
//! <sdf version="1.6">                          <!-- optional wrapper -->
//!   <model name="crate">
//!     <link name="base">
//!       <pose>x y z roll pitch yaw</pose>      <!-- optional, relative to the model -->
//!       <visual name="body">
//!         <pose>x y z roll pitch yaw</pose>    <!-- optional, relative to the link -->
//!         <geometry>
//!           <box><size>sx sy sz</size></box>
//!           <!-- or <sphere><radius>r</radius></sphere> -->
//!           <!-- or <cylinder><radius>r</radius><length>l</length></cylinder> -->
//!         </geometry>
//!         <material>                           <!-- optional; each channel optional -->
//!           <ambient>r g b a</ambient>
//!           <diffuse>r g b a</diffuse>
//!           <specular>r g b a</specular>
//!           <emissive>r g b a</emissive>
//!         </material>
//!       </visual>
//!     </link>
//!   </model>
//! </sdf>
//! ```
//!
//! A light document has `<light name="...">` as its root (optionally inside `<sdf>`), with
//! optional `<diffuse>r g b a</diffuse>` and
//! `<attenuation><constant/><linear/><quadratic/></attenuation>` children.
//!
//! Link and visual names must be unique within their parent. Files conventionally use the
//! `.model.xml` extension.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use roxmltree::{Node, NodeType};
use simsync_core::{Color, EulerRPY, Pose, Quaternion, Vector3};

use crate::records::{LightState, Material};

/// A pose as written in XML: translation and roll/pitch/yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XmlPose {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
}

impl XmlPose {
    pub fn to_pose(&self) -> Pose {
        let [x, y, z] = self.xyz;
        let [r, p, yaw] = self.rpy;
        Pose::new(
            Vector3::new(x, y, z),
            Quaternion::from_euler(&EulerRPY::new(r, p, yaw)),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.xyz == [0.0; 3] && self.rpy == [0.0; 3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Box { size: Vector3 },
    Sphere { radius: f64 },
    Cylinder { radius: f64, length: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualDoc {
    pub name: String,
    pub pose: XmlPose,
    pub geometry: Geometry,
    pub material: Option<Material>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkDoc {
    pub name: String,
    pub pose: XmlPose,
    pub visuals: Vec<VisualDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelXmlDocument {
    pub name: String,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightDoc {
    pub name: String,
    pub diffuse: Color,
    pub attenuation_constant: f64,
    pub attenuation_linear: f64,
    pub attenuation_quadratic: f64,
}

impl LightDoc {
    pub fn to_state(&self) -> LightState {
        LightState {
            name: self.name.clone(),
            color: self.diffuse,
            attenuation_constant: self.attenuation_constant,
            attenuation_linear: self.attenuation_linear,
            attenuation_quadratic: self.attenuation_quadratic,
        }
    }
}

/// Either root kind.
#[derive(Debug, Clone, PartialEq)]
pub enum XmlDocument {
    Model(ModelXmlDocument),
    Light(LightDoc),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum XmlErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("<{element}> is missing attribute '{attribute}'")]
    MissingAttribute {
        element: String,
        attribute: &'static str,
    },
    #[error("<{element}> requires a <{child}> child")]
    MissingElement { element: String, child: &'static str },
    #[error("unsupported element <{element}> inside <{parent}>")]
    Unsupported { element: String, parent: String },
    #[error("<{element}> may appear only once inside <{parent}>")]
    Repeated { element: String, parent: String },
    #[error("duplicate {scope} name '{name}'")]
    DuplicateName { scope: &'static str, name: String },
    #[error("invalid value in <{element}>: {message}")]
    InvalidValue { element: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Parse failure with a 1-based source location (0:0 for I/O failures).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct XmlError {
    pub kind: XmlErrorKind,
    pub line: u32,
    pub column: u32,
}

struct Ctx<'a> {
    doc: &'a roxmltree::Document<'a>,
}

impl Ctx<'_> {
    fn err(&self, node: Node, kind: XmlErrorKind) -> XmlError {
        let pos = self.doc.text_pos_at(node.range().start);
        XmlError {
            kind,
            line: pos.row,
            column: pos.col,
        }
    }

    fn name_attr(&self, node: Node) -> Result<String, XmlError> {
        match node.attribute("name") {
            Some(n) if !n.trim().is_empty() => Ok(n.to_string()),
            _ => Err(self.err(
                node,
                XmlErrorKind::MissingAttribute {
                    element: node.tag_name().name().to_string(),
                    attribute: "name",
                },
            )),
        }
    }

    fn numbers<const N: usize>(&self, node: Node) -> Result<[f64; N], XmlError> {
        let invalid = |message: String| {
            self.err(
                node,
                XmlErrorKind::InvalidValue {
                    element: node.tag_name().name().to_string(),
                    message,
                },
            )
        };
        for child in node.children() {
            if child.is_element() {
                return Err(self.unsupported(child, node));
            }
        }
        let text = node.text().unwrap_or("");
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != N {
            return Err(invalid(format!("expected {N} numbers, found {}", parts.len())));
        }
        let mut out = [0.0; N];
        for (slot, part) in out.iter_mut().zip(parts) {
            let v: f64 = part
                .parse()
                .map_err(|_| invalid(format!("'{part}' is not a number")))?;
            if !v.is_finite() {
                return Err(invalid(format!("'{part}' is not finite")));
            }
            *slot = v;
        }
        Ok(out)
    }

    fn positive(&self, node: Node) -> Result<f64, XmlError> {
        let [v] = self.numbers::<1>(node)?;
        if v <= 0.0 {
            return Err(self.err(
                node,
                XmlErrorKind::InvalidValue {
                    element: node.tag_name().name().to_string(),
                    message: format!("{v} must be positive"),
                },
            ));
        }
        Ok(v)
    }

    fn color(&self, node: Node) -> Result<Color, XmlError> {
        let [r, g, b, a] = self.numbers::<4>(node)?;
        if [r, g, b, a].iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(self.err(
                node,
                XmlErrorKind::InvalidValue {
                    element: node.tag_name().name().to_string(),
                    message: "color channels must lie in [0, 1]".into(),
                },
            ));
        }
        Ok(Color::new(r, g, b, a))
    }

    fn pose(&self, node: Node) -> Result<XmlPose, XmlError> {
        let [x, y, z, r, p, yaw] = self.numbers::<6>(node)?;
        Ok(XmlPose {
            xyz: [x, y, z],
            rpy: [r, p, yaw],
        })
    }

    fn unsupported(&self, node: Node, parent: Node) -> XmlError {
        self.err(
            node,
            XmlErrorKind::Unsupported {
                element: node.tag_name().name().to_string(),
                parent: parent.tag_name().name().to_string(),
            },
        )
    }

    fn repeated(&self, node: Node, parent: Node) -> XmlError {
        self.err(
            node,
            XmlErrorKind::Repeated {
                element: node.tag_name().name().to_string(),
                parent: parent.tag_name().name().to_string(),
            },
        )
    }

    fn children<'a, 'i>(&self, node: Node<'a, 'i>) -> Result<Vec<Node<'a, 'i>>, XmlError> {
        let mut out = Vec::new();
        for c in node.children() {
            match c.node_type() {
                NodeType::Element => out.push(c),
                NodeType::Text if c.text().is_some_and(|t| !t.trim().is_empty()) => {
                    return Err(self.err(
                        c,
                        XmlErrorKind::InvalidValue {
                            element: node.tag_name().name().to_string(),
                            message: "unexpected text".into(),
                        },
                    ));
                }
                _ => {}
            }
        }
        Ok(out)
    }

    fn model(&self, node: Node) -> Result<ModelXmlDocument, XmlError> {
        let name = self.name_attr(node)?;
        let mut links = Vec::new();
        let mut seen = HashSet::new();
        for c in self.children(node)? {
            match c.tag_name().name() {
                "link" => {
                    let link = self.link(c)?;
                    if !seen.insert(link.name.clone()) {
                        return Err(self.err(
                            c,
                            XmlErrorKind::DuplicateName {
                                scope: "link",
                                name: link.name,
                            },
                        ));
                    }
                    links.push(link);
                }
                _ => return Err(self.unsupported(c, node)),
            }
        }
        if links.is_empty() {
            return Err(self.err(
                node,
                XmlErrorKind::MissingElement {
                    element: "model".into(),
                    child: "link",
                },
            ));
        }
        Ok(ModelXmlDocument { name, links })
    }

    fn link(&self, node: Node) -> Result<LinkDoc, XmlError> {
        let name = self.name_attr(node)?;
        let mut pose = None;
        let mut visuals = Vec::new();
        let mut seen = HashSet::new();
        for c in self.children(node)? {
            match c.tag_name().name() {
                "pose" if pose.is_some() => return Err(self.repeated(c, node)),
                "pose" => pose = Some(self.pose(c)?),
                "visual" => {
                    let v = self.visual(c)?;
                    if !seen.insert(v.name.clone()) {
                        return Err(self.err(
                            c,
                            XmlErrorKind::DuplicateName {
                                scope: "visual",
                                name: v.name,
                            },
                        ));
                    }
                    visuals.push(v);
                }
                _ => return Err(self.unsupported(c, node)),
            }
        }
        Ok(LinkDoc {
            name,
            pose: pose.unwrap_or_default(),
            visuals,
        })
    }

    fn visual(&self, node: Node) -> Result<VisualDoc, XmlError> {
        let name = self.name_attr(node)?;
        let mut pose = None;
        let mut geometry = None;
        let mut material = None;
        for c in self.children(node)? {
            match c.tag_name().name() {
                "pose" if pose.is_some() => return Err(self.repeated(c, node)),
                "pose" => pose = Some(self.pose(c)?),
                "geometry" if geometry.is_some() => return Err(self.repeated(c, node)),
                "geometry" => geometry = Some(self.geometry(c)?),
                "material" if material.is_some() => return Err(self.repeated(c, node)),
                "material" => material = Some(self.material(c)?),
                _ => return Err(self.unsupported(c, node)),
            }
        }
        let geometry = geometry.ok_or_else(|| {
            self.err(
                node,
                XmlErrorKind::MissingElement {
                    element: "visual".into(),
                    child: "geometry",
                },
            )
        })?;
        Ok(VisualDoc {
            name,
            pose: pose.unwrap_or_default(),
            geometry,
            material,
        })
    }

    fn geometry(&self, node: Node) -> Result<Geometry, XmlError> {
        let shapes = self.children(node)?;
        let shape = match shapes.as_slice() {
            [one] => *one,
            [] => {
                return Err(self.err(
                    node,
                    XmlErrorKind::MissingElement {
                        element: "geometry".into(),
                        child: "box",
                    },
                ))
            }
            [_, second, ..] => return Err(self.repeated(*second, node)),
        };
        let params = self.children(shape)?;
        let find = |tag: &'static str| -> Result<Node, XmlError> {
            let mut hit = None;
            for p in &params {
                if p.tag_name().name() == tag {
                    if hit.is_some() {
                        return Err(self.repeated(*p, shape));
                    }
                    hit = Some(*p);
                }
            }
            hit.ok_or_else(|| {
                self.err(
                    shape,
                    XmlErrorKind::MissingElement {
                        element: shape.tag_name().name().to_string(),
                        child: tag,
                    },
                )
            })
        };
        let allow = |tags: &[&str]| -> Result<(), XmlError> {
            match params.iter().find(|p| !tags.contains(&p.tag_name().name())) {
                Some(p) => Err(self.unsupported(*p, shape)),
                None => Ok(()),
            }
        };
        match shape.tag_name().name() {
            "box" => {
                allow(&["size"])?;
                let size_node = find("size")?;
                let [x, y, z] = self.numbers::<3>(size_node)?;
                if x <= 0.0 || y <= 0.0 || z <= 0.0 {
                    return Err(self.err(
                        size_node,
                        XmlErrorKind::InvalidValue {
                            element: "size".into(),
                            message: "box dimensions must be positive".into(),
                        },
                    ));
                }
                Ok(Geometry::Box {
                    size: Vector3::new(x, y, z),
                })
            }
            "sphere" => {
                allow(&["radius"])?;
                Ok(Geometry::Sphere {
                    radius: self.positive(find("radius")?)?,
                })
            }
            "cylinder" => {
                allow(&["radius", "length"])?;
                Ok(Geometry::Cylinder {
                    radius: self.positive(find("radius")?)?,
                    length: self.positive(find("length")?)?,
                })
            }
            _ => Err(self.unsupported(shape, node)),
        }
    }

    fn material(&self, node: Node) -> Result<Material, XmlError> {
        let mut m = Material::default();
        let mut seen = HashSet::new();
        for c in self.children(node)? {
            let tag = c.tag_name().name();
            let slot = match tag {
                "ambient" => &mut m.ambient,
                "diffuse" => &mut m.diffuse,
                "specular" => &mut m.specular,
                "emissive" => &mut m.emissive,
                _ => return Err(self.unsupported(c, node)),
            };
            if !seen.insert(tag) {
                return Err(self.repeated(c, node));
            }
            *slot = self.color(c)?;
        }
        Ok(m)
    }

    fn light(&self, node: Node) -> Result<LightDoc, XmlError> {
        let name = self.name_attr(node)?;
        let mut light = LightDoc {
            name,
            diffuse: Color::WHITE,
            attenuation_constant: 1.0,
            attenuation_linear: 0.0,
            attenuation_quadratic: 0.0,
        };
        let mut seen = HashSet::new();
        for c in self.children(node)? {
            let tag = c.tag_name().name();
            if !seen.insert(tag) {
                return Err(self.repeated(c, node));
            }
            match tag {
                "diffuse" => light.diffuse = self.color(c)?,
                "attenuation" => {
                    let mut seen = HashSet::new();
                    for a in self.children(c)? {
                        let tag = a.tag_name().name();
                        let slot = match tag {
                            "constant" => &mut light.attenuation_constant,
                            "linear" => &mut light.attenuation_linear,
                            "quadratic" => &mut light.attenuation_quadratic,
                            _ => return Err(self.unsupported(a, c)),
                        };
                        if !seen.insert(tag) {
                            return Err(self.repeated(a, c));
                        }
                        let [v] = self.numbers::<1>(a)?;
                        if v < 0.0 {
                            return Err(self.err(
                                a,
                                XmlErrorKind::InvalidValue {
                                    element: tag.to_string(),
                                    message: "attenuation must be non-negative".into(),
                                },
                            ));
                        }
                        *slot = v;
                    }
                }
                _ => return Err(self.unsupported(c, node)),
            }
        }
        Ok(light)
    }
}

/// Parses a model or light document.
pub fn parse_document(text: &str) -> Result<XmlDocument, XmlError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        XmlError {
            kind: XmlErrorKind::Syntax(e.to_string()),
            line: pos.row,
            column: pos.col,
        }
    })?;
    let ctx = Ctx { doc: &doc };
    let mut root = doc.root_element();
    if root.tag_name().name() == "sdf" {
        let inner = ctx.children(root)?;
        root = match inner.as_slice() {
            [one] => *one,
            [] => {
                return Err(ctx.err(
                    root,
                    XmlErrorKind::MissingElement {
                        element: "sdf".into(),
                        child: "model",
                    },
                ))
            }
            [_, second, ..] => return Err(ctx.repeated(*second, root)),
        };
    }
    match root.tag_name().name() {
        "model" => ctx.model(root).map(XmlDocument::Model),
        "light" => ctx.light(root).map(XmlDocument::Light),
        other => Err(ctx.err(
            root,
            XmlErrorKind::Unsupported {
                element: other.to_string(),
                parent: "document".into(),
            },
        )),
    }
}

/// Parses model XML text.
pub fn parse_model_xml(text: &str) -> Result<ModelXmlDocument, XmlError> {
    match parse_document(text)? {
        XmlDocument::Model(m) => Ok(m),
        XmlDocument::Light(_) => Err(XmlError {
            kind: XmlErrorKind::Unsupported {
                element: "light".into(),
                parent: "document".into(),
            },
            line: 1,
            column: 1,
        }),
    }
}

fn read_file(path: &Path) -> Result<String, XmlError> {
    std::fs::read_to_string(path).map_err(|e| XmlError {
        kind: XmlErrorKind::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        },
        line: 0,
        column: 0,
    })
}

/// Reads and parses a model file.
pub fn load_model_xml_file(path: impl AsRef<Path>) -> Result<ModelXmlDocument, XmlError> {
    parse_model_xml(&read_file(path.as_ref())?)
}

/// Reads and parses a model or light file.
pub fn load_document_file(path: impl AsRef<Path>) -> Result<XmlDocument, XmlError> {
    parse_document(&read_file(path.as_ref())?)
}

/// Accepts either XML text (anything starting with `<`) or a path to a file.
pub fn load_model_xml(source: &str) -> Result<ModelXmlDocument, XmlError> {
    if source.trim_start().starts_with('<') {
        parse_model_xml(source)
    } else {
        load_model_xml_file(source)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

fn color_text(c: &Color) -> String {
    format!("{} {} {} {}", c.r, c.g, c.b, c.a)
}

fn pose_text(p: &XmlPose) -> String {
    format!(
        "{} {} {} {} {} {}",
        p.xyz[0], p.xyz[1], p.xyz[2], p.rpy[0], p.rpy[1], p.rpy[2]
    )
}

impl ModelXmlDocument {
    /// Serializes back to the grammar above. Parsing the output yields an equal document.
    pub fn to_xml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "<model name=\"{}\">", escape(&self.name));
        for link in &self.links {
            let _ = writeln!(s, "  <link name=\"{}\">", escape(&link.name));
            if !link.pose.is_identity() {
                let _ = writeln!(s, "    <pose>{}</pose>", pose_text(&link.pose));
            }
            for v in &link.visuals {
                let _ = writeln!(s, "    <visual name=\"{}\">", escape(&v.name));
                if !v.pose.is_identity() {
                    let _ = writeln!(s, "      <pose>{}</pose>", pose_text(&v.pose));
                }
                s.push_str("      <geometry>\n");
                match v.geometry {
                    Geometry::Box { size } => {
                        let _ = writeln!(
                            s,
                            "        <box><size>{} {} {}</size></box>",
                            size.x, size.y, size.z
                        );
                    }
                    Geometry::Sphere { radius } => {
                        let _ = writeln!(s, "        <sphere><radius>{radius}</radius></sphere>");
                    }
                    Geometry::Cylinder { radius, length } => {
                        let _ = writeln!(
                            s,
                            "        <cylinder><radius>{radius}</radius><length>{length}</length></cylinder>"
                        );
                    }
                }
                s.push_str("      </geometry>\n");
                if let Some(m) = &v.material {
                    s.push_str("      <material>\n");
                    for (tag, c) in [
                        ("ambient", &m.ambient),
                        ("diffuse", &m.diffuse),
                        ("specular", &m.specular),
                        ("emissive", &m.emissive),
                    ] {
                        let _ = writeln!(s, "        <{tag}>{}</{tag}>", color_text(c));
                    }
                    s.push_str("      </material>\n");
                }
                s.push_str("    </visual>\n");
            }
            s.push_str("  </link>\n");
        }
        s.push_str("</model>\n");
        s
    }

    /// Renames the model, keeping its links and visuals.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// A single-link, single-visual box model.
    pub fn single_box(name: impl Into<String>, size: Vector3) -> Self {
        ModelXmlDocument {
            name: name.into(),
            links: vec![LinkDoc {
                name: "base".into(),
                pose: XmlPose::default(),
                visuals: vec![VisualDoc {
                    name: "body".into(),
                    pose: XmlPose::default(),
                    geometry: Geometry::Box { size },
                    material: None,
                }],
            }],
        }
    }
}
