//! Reader and writer for the supported URDF subset.
//!
//! Supported: `robot`, `link`, `inertial` (`origin`, `mass`, `inertia`), `joint` of type
//! `revolute` or `fixed` (`origin`, `parent`, `child`, `axis`, `limit`). Anything else is
//! skipped and reported as a warning.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use roxmltree::{Document, Node};

use super::{
    JointKind, JointSpec, LinkSpec, ModelError, Origin, RobotModel, SemanticError,
    AXIS_NORM_TOLERANCE, INERTIA_SYMMETRY_TOLERANCE,
};

/// A parsed model plus the warnings collected for skipped content.
#[derive(Debug, Clone)]
pub struct ParsedRobot {
    pub model: RobotModel,
    pub warnings: Vec<String>,
}

struct Ctx<'a, 'input> {
    doc: &'a Document<'input>,
    warnings: Vec<String>,
}

impl<'a, 'input> Ctx<'a, 'input> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn describe(&self, node: Node) -> String {
        match node.attribute("name") {
            Some(name) => format!("<{} name=\"{}\"> (line {})", node.tag_name().name(), name, self.line(node)),
            None => format!("<{}> (line {})", node.tag_name().name(), self.line(node)),
        }
    }

    fn skip(&mut self, node: Node, parent: Node) {
        let msg = format!(
            "line {}: ignoring unsupported element <{}> inside <{}>",
            self.line(node),
            node.tag_name().name(),
            parent.tag_name().name()
        );
        self.warnings.push(msg);
    }

    fn invalid(&self, node: Node, message: impl Into<String>) -> SemanticError {
        SemanticError::InvalidValue {
            context: self.describe(node),
            message: message.into(),
        }
    }

    fn missing(&self, node: Node, what: impl Into<String>) -> SemanticError {
        SemanticError::Missing {
            context: self.describe(node),
            what: what.into(),
        }
    }

    fn required_attr<'n>(&self, node: Node<'n, 'input>, attr: &str) -> Result<&'n str, SemanticError> {
        node.attribute(attr)
            .ok_or_else(|| self.missing(node, format!("attribute '{attr}'")))
    }

    fn scalar(&self, node: Node, attr: &str) -> Result<Option<f64>, SemanticError> {
        match node.attribute(attr) {
            None => Ok(None),
            Some(text) => {
                let value: f64 = text
                    .trim()
                    .parse()
                    .map_err(|_| self.invalid(node, format!("attribute '{attr}' is not a number: '{text}'")))?;
                if !value.is_finite() {
                    return Err(self.invalid(node, format!("attribute '{attr}' is not finite")));
                }
                Ok(Some(value))
            }
        }
    }

    fn triple(&self, node: Node, attr: &str) -> Result<Option<[f64; 3]>, SemanticError> {
        let Some(text) = node.attribute(attr) else {
            return Ok(None);
        };
        let mut out = [0.0; 3];
        let mut count = 0;
        for token in text.split_whitespace() {
            if count == 3 {
                return Err(self.invalid(node, format!("attribute '{attr}' has more than 3 values")));
            }
            let value: f64 = token
                .parse()
                .map_err(|_| self.invalid(node, format!("attribute '{attr}' has non-numeric value '{token}'")))?;
            if !value.is_finite() {
                return Err(self.invalid(node, format!("attribute '{attr}' is not finite")));
            }
            out[count] = value;
            count += 1;
        }
        if count != 3 {
            return Err(self.invalid(node, format!("attribute '{attr}' needs 3 values, found {count}")));
        }
        Ok(Some(out))
    }

    fn origin(&self, node: Node) -> Result<Origin, SemanticError> {
        Ok(Origin {
            xyz: self.triple(node, "xyz")?.unwrap_or([0.0; 3]),
            rpy: self.triple(node, "rpy")?.unwrap_or([0.0; 3]),
        })
    }
}

/// Parses a URDF-subset document into a validated [`RobotModel`].
pub fn parse_robot_description(text: &str) -> Result<ParsedRobot, ModelError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ModelError::Syntax {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let mut ctx = Ctx {
        doc: &doc,
        warnings: Vec::new(),
    };
    let root = doc.root_element();
    if root.tag_name().name() != "robot" {
        return Err(SemanticError::Missing {
            context: "document".into(),
            what: format!("<robot> root element (found <{}>)", root.tag_name().name()),
        }
        .into());
    }

    let mut links = Vec::new();
    let mut joints = Vec::new();
    for child in root.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "link" => links.push(parse_link(&mut ctx, child)?),
            "joint" => joints.push(parse_joint(&mut ctx, child)?),
            _ => ctx.skip(child, root),
        }
    }

    let model = build_tree(root.attribute("name").unwrap_or("").to_string(), links, joints)?;
    Ok(ParsedRobot {
        model,
        warnings: ctx.warnings,
    })
}

fn parse_link(ctx: &mut Ctx, node: Node) -> Result<LinkSpec, SemanticError> {
    let name = ctx.required_attr(node, "name")?.to_string();
    let mut link = LinkSpec::massless(name);
    let mut seen_inertial = false;
    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "inertial" => {
                if seen_inertial {
                    return Err(ctx.invalid(node, "more than one <inertial> element"));
                }
                seen_inertial = true;
                parse_inertial(ctx, child, &mut link)?;
            }
            _ => ctx.skip(child, node),
        }
    }
    Ok(link)
}

fn parse_inertial(ctx: &mut Ctx, node: Node, link: &mut LinkSpec) -> Result<(), SemanticError> {
    let mut origin = Origin::default();
    let mut mass = None;
    let mut inertia = None;
    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "origin" => origin = ctx.origin(child)?,
            "mass" => {
                let value = ctx
                    .scalar(child, "value")?
                    .ok_or_else(|| ctx.missing(child, "attribute 'value'"))?;
                if value < 0.0 {
                    return Err(ctx.invalid(child, format!("negative mass {value}")));
                }
                mass = Some(value);
            }
            "inertia" => {
                let get = |attr: &str| -> Result<f64, SemanticError> {
                    ctx.scalar(child, attr)?
                        .ok_or_else(|| ctx.missing(child, format!("attribute '{attr}'")))
                };
                let (ixx, ixy, ixz) = (get("ixx")?, get("ixy")?, get("ixz")?);
                let (iyy, iyz, izz) = (get("iyy")?, get("iyz")?, get("izz")?);
                inertia = Some(Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz));
            }
            _ => ctx.skip(child, node),
        }
    }
    let mass = mass.ok_or_else(|| ctx.missing(node, "<mass>"))?;
    let inertia = inertia.ok_or_else(|| ctx.missing(node, "<inertia>"))?;

    // Re-express the tensor in link-frame axes so the stored origin needs no rotation.
    let rot = origin.rotation().to_rotation_matrix();
    let rotated = rot.matrix() * inertia * rot.matrix().transpose();
    let rotated = (rotated + rotated.transpose()) * 0.5;
    if !is_positive_semidefinite(&rotated) {
        return Err(ctx.invalid(node, "inertia tensor is not positive semidefinite"));
    }
    link.mass = mass;
    link.com = Vector3::from(origin.xyz);
    link.inertia = rotated;
    Ok(())
}

fn is_positive_semidefinite(m: &Matrix3<f64>) -> bool {
    if (m - m.transpose()).abs().max() > INERTIA_SYMMETRY_TOLERANCE {
        return false;
    }
    let scale = m.abs().max().max(1.0);
    m.symmetric_eigenvalues().min() >= -1e-12 * scale
}

fn parse_joint(ctx: &mut Ctx, node: Node) -> Result<JointSpec, SemanticError> {
    let name = ctx.required_attr(node, "name")?.to_string();
    let kind = match ctx.required_attr(node, "type")? {
        "revolute" => JointKind::Revolute,
        "fixed" => JointKind::Fixed,
        other => {
            return Err(SemanticError::UnsupportedJointKind {
                joint: name,
                kind: other.to_string(),
            })
        }
    };
    let mut origin = Origin::default();
    let mut parent = None;
    let mut child_link = None;
    let mut axis = Vector3::x();
    let mut position_limits = None;
    let mut effort_limit = None;

    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "origin" => origin = ctx.origin(child)?,
            "parent" => parent = Some(ctx.required_attr(child, "link")?.to_string()),
            "child" => child_link = Some(ctx.required_attr(child, "link")?.to_string()),
            "axis" => {
                let xyz = ctx
                    .triple(child, "xyz")?
                    .ok_or_else(|| ctx.missing(child, "attribute 'xyz'"))?;
                let v = Vector3::from(xyz);
                let norm = v.norm();
                if norm == 0.0 {
                    return Err(ctx.invalid(child, "zero-length axis"));
                }
                if (norm - 1.0).abs() > AXIS_NORM_TOLERANCE {
                    ctx.warnings.push(format!(
                        "line {}: axis of joint '{}' has norm {norm}, normalized",
                        ctx.line(child),
                        name
                    ));
                }
                axis = v / norm;
            }
            "limit" => {
                let lower = ctx.scalar(child, "lower")?;
                let upper = ctx.scalar(child, "upper")?;
                match (lower, upper) {
                    (Some(lo), Some(hi)) => {
                        if lo > hi {
                            return Err(ctx.invalid(child, format!("lower limit {lo} exceeds upper limit {hi}")));
                        }
                        position_limits = Some([lo, hi]);
                    }
                    (None, None) => {}
                    _ => return Err(ctx.invalid(child, "'lower' and 'upper' must be given together")),
                }
                if let Some(effort) = ctx.scalar(child, "effort")? {
                    if effort <= 0.0 {
                        return Err(ctx.invalid(child, format!("effort limit must be positive, got {effort}")));
                    }
                    effort_limit = Some(effort);
                }
            }
            _ => ctx.skip(child, node),
        }
    }

    Ok(JointSpec {
        parent: parent.ok_or_else(|| ctx.missing(node, "<parent>"))?,
        child: child_link.ok_or_else(|| ctx.missing(node, "<child>"))?,
        name,
        kind,
        origin,
        axis,
        position_limits,
        effort_limit,
    })
}

fn build_tree(name: String, links: Vec<LinkSpec>, joints: Vec<JointSpec>) -> Result<RobotModel, SemanticError> {
    let mut link_names = HashSet::new();
    for link in &links {
        if !link_names.insert(link.name.as_str()) {
            return Err(SemanticError::DuplicateName {
                kind: "link",
                name: link.name.clone(),
            });
        }
    }
    let mut joint_names = HashSet::new();
    let mut parent_of: HashMap<&str, &str> = HashMap::new();
    for joint in &joints {
        if !joint_names.insert(joint.name.as_str()) {
            return Err(SemanticError::DuplicateName {
                kind: "joint",
                name: joint.name.clone(),
            });
        }
        for link in [&joint.parent, &joint.child] {
            if !link_names.contains(link.as_str()) {
                return Err(SemanticError::MissingLink {
                    joint: joint.name.clone(),
                    link: link.clone(),
                });
            }
        }
        if joint.parent == joint.child {
            return Err(SemanticError::NotATree(format!(
                "joint '{}' connects link '{}' to itself",
                joint.name, joint.parent
            )));
        }
        if parent_of.insert(joint.child.as_str(), joint.parent.as_str()).is_some() {
            return Err(SemanticError::NotATree(format!(
                "link '{}' is the child of more than one joint",
                joint.child
            )));
        }
    }

    let roots: Vec<&str> = links
        .iter()
        .map(|l| l.name.as_str())
        .filter(|l| !parent_of.contains_key(l))
        .collect();
    let root = match roots.as_slice() {
        [root] => root.to_string(),
        [] => return Err(SemanticError::NotATree("no root link (cycle)".into())),
        many => {
            return Err(SemanticError::NotATree(format!(
                "multiple root links: {}",
                many.join(", ")
            )))
        }
    };

    // With one parent per link and a single root, a link is in the tree iff its
    // ancestor walk terminates at the root.
    for link in &links {
        let mut current = link.name.as_str();
        let mut steps = 0;
        while let Some(&parent) = parent_of.get(current) {
            current = parent;
            steps += 1;
            if steps > links.len() {
                return Err(SemanticError::NotATree(format!(
                    "cycle through link '{}'",
                    link.name
                )));
            }
        }
    }

    Ok(RobotModel {
        name,
        links,
        joints,
        root,
    })
}

/// Writes `model` back out in the supported subset.
///
/// Floats use Rust's shortest round-trip formatting, so re-parsing reproduces the model.
pub fn to_urdf(model: &RobotModel) -> String {
    let mut out = String::new();
    let v3 = |v: &[f64]| format!("{} {} {}", v[0], v[1], v[2]);
    let _ = writeln!(out, "<?xml version=\"1.0\"?>");
    let _ = writeln!(out, "<robot name=\"{}\">", escape(&model.name));
    for link in &model.links {
        let _ = writeln!(out, "  <link name=\"{}\">", escape(&link.name));
        let i = &link.inertia;
        let _ = writeln!(out, "    <inertial>");
        let _ = writeln!(out, "      <origin xyz=\"{}\" rpy=\"0 0 0\"/>", v3(link.com.as_slice()));
        let _ = writeln!(out, "      <mass value=\"{}\"/>", link.mass);
        let _ = writeln!(
            out,
            "      <inertia ixx=\"{}\" ixy=\"{}\" ixz=\"{}\" iyy=\"{}\" iyz=\"{}\" izz=\"{}\"/>",
            i[(0, 0)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 1)],
            i[(1, 2)],
            i[(2, 2)]
        );
        let _ = writeln!(out, "    </inertial>");
        let _ = writeln!(out, "  </link>");
    }
    for joint in &model.joints {
        let _ = writeln!(
            out,
            "  <joint name=\"{}\" type=\"{}\">",
            escape(&joint.name),
            joint.kind.as_str()
        );
        let _ = writeln!(out, "    <parent link=\"{}\"/>", escape(&joint.parent));
        let _ = writeln!(out, "    <child link=\"{}\"/>", escape(&joint.child));
        let _ = writeln!(
            out,
            "    <origin xyz=\"{}\" rpy=\"{}\"/>",
            v3(&joint.origin.xyz),
            v3(&joint.origin.rpy)
        );
        let _ = writeln!(out, "    <axis xyz=\"{}\"/>", v3(joint.axis.as_slice()));
        if joint.position_limits.is_some() || joint.effort_limit.is_some() {
            let mut attrs = String::new();
            if let Some([lo, hi]) = joint.position_limits {
                let _ = write!(attrs, " lower=\"{lo}\" upper=\"{hi}\"");
            }
            if let Some(effort) = joint.effort_limit {
                let _ = write!(attrs, " effort=\"{effort}\"");
            }
            let _ = writeln!(out, "    <limit{attrs}/>");
        }
        let _ = writeln!(out, "  </joint>");
    }
    out.push_str("</robot>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
