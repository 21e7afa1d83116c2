//! Topology builders with static FIB provisioning.
//!
//! Home: a star around one router.
//!
//! ```text
//!            controller
//!                |
//!   home1 --- router --- home3
//!                |
//!              home2
//! ```
//!
//! Every home node hosts a luminosity detector, an occupancy detector and a
//! light. Exhibition: `m` routers in a chain, the controller hanging off
//! router 1, and `n` light sections per router.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::forwarder::{FaceId, Forwarder};
use crate::names::{Name, NameComponent, NamePattern};
use crate::packets::{publish_prefix, NodeId, SERVICE_LUMINOSITY, SERVICE_OCCUPANCY};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Router,
    Controller,
    Home,
    Light,
}

/// Lights of one functional area as the controller sees them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaLayout {
    pub area: NameComponent,
    pub group_prefix: Name,
    pub lights: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppSpec {
    Controller {
        areas: Vec<AreaLayout>,
    },
    Luminosity {
        id: String,
        location: Vec<NameComponent>,
    },
    Occupancy {
        id: String,
        location: Vec<NameComponent>,
    },
    Light {
        id: NameComponent,
        label: String,
        prefixes: Vec<Name>,
    },
}

impl AppSpec {
    pub fn label(&self) -> &str {
        match self {
            AppSpec::Controller { .. } => "controller",
            AppSpec::Luminosity { id, .. } | AppSpec::Occupancy { id, .. } => id,
            AppSpec::Light { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub label: String,
    pub role: Role,
    pub forwarder: Forwarder,
    /// Applications on local faces.
    pub apps: Vec<(FaceId, AppSpec)>,
}

/// A point-to-point link, labelled after its `child` end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub label: String,
    pub child: (usize, FaceId),
    pub parent: (usize, FaceId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

impl Topology {
    pub fn node(&self, label: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.label == label)
    }

    pub fn link(&self, label: &str) -> Option<&LinkSpec> {
        self.links.iter().find(|l| l.label == label)
    }

    /// Connected, exactly one controller, faces used at most once.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidTopology(m));
        let controllers = self.nodes.iter().filter(|n| n.role == Role::Controller).count();
        if controllers != 1 {
            return bad(format!("expected one controller, found {controllers}"));
        }
        let mut used = BTreeSet::new();
        let ends = self.links.iter().flat_map(|l| [l.child, l.parent]);
        let apps = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.apps.iter().map(move |(f, _)| (i, *f)));
        for (node, face) in ends.chain(apps) {
            if node >= self.nodes.len() {
                return bad(format!("link endpoint refers to missing node {node}"));
            }
            if !used.insert((node, face)) {
                return bad(format!("face {face} on {} is used twice", self.nodes[node].label));
            }
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            for l in &self.links {
                if l.child.0 == i {
                    stack.push(l.parent.0);
                } else if l.parent.0 == i {
                    stack.push(l.child.0);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return bad(format!("{} is not connected", self.nodes[i].label));
        }
        Ok(())
    }

    pub fn fib_sizes(&self) -> impl Iterator<Item = (&str, usize)> {
        self.nodes.iter().map(|n| (n.label.as_str(), n.forwarder.fib_size()))
    }
}

fn c(s: &str) -> NameComponent {
    NameComponent::new(s).expect("builder component")
}

fn n(uri: &str) -> Name {
    Name::parse(uri).expect("builder name")
}

fn node(id: usize, label: String, role: Role, faces: impl IntoIterator<Item = u32>) -> NodeSpec {
    let mut forwarder = Forwarder::new(NodeId(id as u32));
    for f in faces {
        forwarder.add_face(FaceId(f));
    }
    NodeSpec {
        label,
        role,
        forwarder,
        apps: Vec::new(),
    }
}

fn route(node: &mut NodeSpec, prefix: Name, face: u32, filter: Option<NamePattern>) {
    node.forwarder
        .register_prefix(prefix, FaceId(face), filter)
        .expect("face added by builder");
}

/// Home star with `n_home_nodes` nodes in area `floor1`.
///
/// Router faces: 0 to the controller, `i` to home node `i`. Home node faces:
/// 0 uplink, 1 luminosity, 2 occupancy, 3 light. Controller faces: 0 uplink,
/// 1 application.
pub fn build_home_topology(n_home_nodes: usize) -> Result<Topology, SimError> {
    if n_home_nodes < 1 {
        return Err(SimError::InvalidTopology("home topology needs at least 1 node".into()));
    }
    let area = c("floor1");
    let group = n("/home/light/floor1");
    let light_prefix = |i: usize| group.join(&[c(&format!("r{i}")), c(&format!("L{i}"))]);
    let publish = [publish_prefix(SERVICE_LUMINOSITY), publish_prefix(SERVICE_OCCUPANCY)];

    let mut router = node(0, "router".into(), Role::Router, 0..=n_home_nodes as u32);
    for p in &publish {
        route(&mut router, p.clone(), 0, None);
    }
    for i in 1..=n_home_nodes {
        route(&mut router, n("/home/light"), i as u32, None);
        route(&mut router, light_prefix(i), i as u32, None);
    }

    let mut controller = node(1, "controller".into(), Role::Controller, [0, 1]);
    for p in &publish {
        route(&mut controller, p.clone(), 1, None);
    }
    route(&mut controller, n("/home/light"), 0, None);
    controller.apps.push((
        FaceId(1),
        AppSpec::Controller {
            areas: vec![AreaLayout {
                area: area.clone(),
                group_prefix: group.clone(),
                lights: (1..=n_home_nodes).map(light_prefix).collect(),
            }],
        },
    ));

    let mut nodes = vec![router, controller];
    let mut links = vec![LinkSpec {
        label: "controller".into(),
        child: (1, FaceId(0)),
        parent: (0, FaceId(0)),
    }];
    for i in 1..=n_home_nodes {
        let label = format!("home{i}");
        let mut h = node(i + 1, label.clone(), Role::Home, 0..=3);
        route(&mut h, n("/home"), 0, None);
        route(&mut h, group.clone(), 3, None);
        route(&mut h, light_prefix(i), 3, None);
        let location = vec![area.clone(), c(&format!("r{i}"))];
        h.apps.push((
            FaceId(1),
            AppSpec::Luminosity {
                id: format!("ld{i}"),
                location: location.clone(),
            },
        ));
        h.apps.push((
            FaceId(2),
            AppSpec::Occupancy {
                id: format!("od{i}"),
                location,
            },
        ));
        h.apps.push((
            FaceId(3),
            AppSpec::Light {
                id: c(&format!("L{i}")),
                label: format!("L{i}"),
                prefixes: vec![group.clone(), light_prefix(i)],
            },
        ));
        nodes.push(h);
        links.push(LinkSpec {
            label,
            child: (i + 1, FaceId(0)),
            parent: (0, FaceId(i as u32)),
        });
    }
    let t = Topology { nodes, links };
    t.validate()?;
    Ok(t)
}

fn room(k: usize) -> NameComponent {
    c(&format!("room-{k}"))
}

fn section(j: usize) -> NameComponent {
    c(&format!("section-{j}"))
}

/// Filter for the face toward router `k + 1`: any room beyond `k`.
fn downstream_filter(k: usize, m: usize) -> NamePattern {
    NamePattern::new(vec![(k + 1..=m).map(room).collect()], true).expect("k < m")
}

fn section_filter(k: usize, j: usize) -> NamePattern {
    NamePattern::new(vec![BTreeSet::from([room(k)]), BTreeSet::from([section(j)])], true).expect("non-empty")
}

/// Linear exhibition hall.
///
/// Router `k` faces: 0 toward router `k + 1` (absent on the last router),
/// `1..=n` to its sections, `n + 1` toward router `k - 1` or the controller.
/// Without filtering each router holds one entry per section plus one more:
/// `/home/light` downstream, or a `/home` default route upstream on the last
/// router. With filtering the whole table collapses into `/home/light` with
/// a name pattern per face.
pub fn build_exhibition_topology(m: usize, n_sections: usize, filtering: bool) -> Result<Topology, SimError> {
    if m < 1 || n_sections < 1 {
        return Err(SimError::InvalidTopology("exhibition needs m >= 1 and n >= 1".into()));
    }
    let up = n_sections as u32 + 1;
    let light_root = n("/home/light");

    let mut controller = node(0, "controller".into(), Role::Controller, [0, 1]);
    route(&mut controller, light_root.clone(), 0, None);
    controller
        .apps
        .push((FaceId(1), AppSpec::Controller { areas: Vec::new() }));
    let mut nodes = vec![controller];
    let mut links = vec![LinkSpec {
        label: "controller".into(),
        child: (0, FaceId(0)),
        parent: (1, FaceId(up)),
    }];

    for k in 1..=m {
        let first_face = if k < m { 0 } else { 1 };
        let mut r = node(k, format!("router{k}"), Role::Router, first_face..=up);
        for j in 1..=n_sections {
            if filtering {
                route(&mut r, light_root.clone(), j as u32, Some(section_filter(k, j)));
            } else {
                route(&mut r, light_root.join(&[room(k), section(j)]), j as u32, None);
            }
        }
        match (k < m, filtering) {
            (true, true) => route(&mut r, light_root.clone(), 0, Some(downstream_filter(k, m))),
            (true, false) => route(&mut r, light_root.clone(), 0, None),
            (false, true) => {}
            (false, false) => route(&mut r, n("/home"), up, None),
        }
        nodes.push(r);
        if k >= 2 {
            links.push(LinkSpec {
                label: format!("router{k}"),
                child: (k, FaceId(up)),
                parent: (k - 1, FaceId(0)),
            });
        }
    }

    for k in 1..=m {
        for j in 1..=n_sections {
            let idx = nodes.len();
            let label = format!("light-{k}-{j}");
            let prefix = light_root.join(&[room(k), section(j)]);
            let mut l = node(idx, label.clone(), Role::Light, [0, 1]);
            route(&mut l, prefix.clone(), 1, None);
            l.apps.push((
                FaceId(1),
                AppSpec::Light {
                    id: c(&format!("L{k}-{j}")),
                    label: label.clone(),
                    prefixes: vec![prefix],
                },
            ));
            nodes.push(l);
            links.push(LinkSpec {
                label,
                child: (idx, FaceId(0)),
                parent: (k, FaceId(j as u32)),
            });
        }
    }
    let t = Topology { nodes, links };
    t.validate()?;
    Ok(t)
}

/// FIB and per-face filters of every exhibition router in both modes, laid
/// out as `FIB entry | face | filter` rows.
pub fn fib_report(m: usize, n_sections: usize) -> Result<String, SimError> {
    let mut out = String::new();
    for filtering in [false, true] {
        let t = build_exhibition_topology(m, n_sections, filtering)?;
        for r in t.nodes.iter().filter(|x| x.role == Role::Router) {
            let _ = writeln!(
                out,
                "{} filtering={} fib_size={}",
                r.label,
                if filtering { "on" } else { "off" },
                r.forwarder.fib_size()
            );
            let _ = writeln!(out, "  {:<32} {:<5} filter", "FIB entry", "face");
            for e in r.forwarder.fib_entries() {
                for (i, h) in e.nexthops.iter().enumerate() {
                    let prefix = if i == 0 { e.prefix.to_string() } else { String::new() };
                    let filter = h.filter.as_ref().map_or("-".to_string(), |p| p.to_string());
                    let _ = writeln!(out, "  {:<32} {:<5} {}", prefix, format!("F{}", h.face), filter);
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}
