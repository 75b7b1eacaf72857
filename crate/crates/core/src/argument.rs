//! Argumentation trees justifying a truthfulness verdict.
//!
//! Arguments are pairs ⟨Φ, α⟩ of a support set and a claim. A tree has the
//! trusting argument ⟨{b}, b⟩ at its root, one skeptic child per feature
//! claiming ¬b because that feature's score may be untruthful, and, below a
//! skeptic, one defense leaf per alteration once every alteration of the
//! feature behaved as its score predicted.
//!
//! Marking is the usual bottom-up recursion: a node is defeated (D) when some
//! child is undefeated (U), otherwise it is undefeated. The tree is
//! warranted when the root is undefeated, which here happens exactly when
//! the explanation has no untruthful feature.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::perturb::Direction;
use crate::truthfulness::{AlterationRecord, Behaviour, EvaluationReport, FeatureVerdict};

/// How predictions are printed inside atom sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionStyle {
    /// `0.93` prints as `93%`, rounded to two decimals.
    #[default]
    Percent,
    /// Shortest round-trip decimal.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "atom", rename_all = "snake_case")]
pub enum Atom {
    /// a
    Untrusted,
    /// b
    Trusted,
    /// c_j
    Untruthful { feature: usize, name: String },
    /// d_j
    Truthful { feature: usize, name: String },
    /// e_{j,ALT}: an alteration that contradicted the score.
    Misbehaved {
        feature: usize,
        name: String,
        direction: Direction,
        value_from: f64,
        value_to: f64,
        score: f64,
    },
    /// f_{j,ALT}: an alteration that behaved as the score predicted.
    AsExpected {
        feature: usize,
        name: String,
        direction: Direction,
        value_from: f64,
        value_to: f64,
        observed: Behaviour,
        p_orig: f64,
        p_alt: f64,
        score: f64,
    },
}

impl Atom {
    fn misbehaved(verdict: &FeatureVerdict, record: &AlterationRecord) -> Self {
        Atom::Misbehaved {
            feature: verdict.feature_id,
            name: verdict.display_name(),
            direction: record.direction,
            value_from: record.value_from,
            value_to: record.value_to,
            score: verdict.score,
        }
    }

    fn as_expected(verdict: &FeatureVerdict, record: &AlterationRecord) -> Self {
        Atom::AsExpected {
            feature: verdict.feature_id,
            name: verdict.display_name(),
            direction: record.direction,
            value_from: record.value_from,
            value_to: record.value_to,
            observed: record.observed,
            p_orig: record.p_orig,
            p_alt: record.p_alt,
            score: verdict.score,
        }
    }

    /// Short symbolic name, e.g. `c_f3` or `f_Diffusion,DEC`.
    pub fn symbol(&self) -> String {
        match self {
            Atom::Untrusted => "a".into(),
            Atom::Trusted => "b".into(),
            Atom::Untruthful { name, .. } => format!("c_{name}"),
            Atom::Truthful { name, .. } => format!("d_{name}"),
            Atom::Misbehaved {
                name, direction, ..
            } => format!("e_{name},{}", direction.label()),
            Atom::AsExpected {
                name, direction, ..
            } => format!("f_{name},{}", direction.label()),
        }
    }

    /// The atom as an English sentence.
    pub fn render(&self, style: PredictionStyle) -> String {
        match self {
            Atom::Untrusted => "The explanation is untrusted".into(),
            Atom::Trusted => "The explanation is trusted".into(),
            Atom::Untruthful { name, .. } => format!("The importance z_{name} is untruthful"),
            Atom::Truthful { name, .. } => format!("The importance z_{name} is truthful"),
            Atom::Misbehaved {
                name,
                direction,
                value_from,
                value_to,
                score,
                ..
            } => format!(
                "The model's behaviour by altering {name}'s value from {value_from} to \
                 {value_to} ({}) is not according to its importance z_{name}={score}.",
                direction.label()
            ),
            Atom::AsExpected {
                name,
                direction,
                value_from,
                value_to,
                observed,
                p_orig,
                p_alt,
                score,
                ..
            } => format!(
                "The evaluation of the alteration of {name}'s value {value_from} to {value_to} \
                 ({}) was performed and the model's behaviour was as expected {} ({} to {}), \
                 according to its importance z_{name}={score}.",
                direction.label(),
                observed.label(),
                format_prediction(*p_orig, style),
                format_prediction(*p_alt, style),
            ),
        }
    }
}

fn format_prediction(p: f64, style: PredictionStyle) -> String {
    match style {
        PredictionStyle::Raw => p.to_string(),
        PredictionStyle::Percent => {
            let rounded = (p * 100.0 * 100.0).round() / 100.0;
            let mut text = format!("{rounded:.2}");
            while text.ends_with('0') {
                text.pop();
            }
            if text.ends_with('.') {
                text.pop();
            }
            if text == "-0" {
                text = "0".into();
            }
            format!("{text}%")
        }
    }
}

/// An atom or its negation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            negated: true,
        }
    }

    pub fn symbol(&self) -> String {
        if self.negated {
            format!("¬{}", self.atom.symbol())
        } else {
            self.atom.symbol()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formula {
    Fact {
        literal: Literal,
    },
    Implies {
        premise: Literal,
        conclusion: Literal,
    },
}

impl Formula {
    pub fn fact(atom: Atom) -> Self {
        Formula::Fact {
            literal: Literal::pos(atom),
        }
    }

    pub fn implies(premise: Literal, conclusion: Literal) -> Self {
        Formula::Implies {
            premise,
            conclusion,
        }
    }

    pub fn symbol(&self) -> String {
        match self {
            Formula::Fact { literal } => literal.symbol(),
            Formula::Implies {
                premise,
                conclusion,
            } => format!("{} → {}", premise.symbol(), conclusion.symbol()),
        }
    }
}

/// ⟨Φ, α⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub support: Vec<Formula>,
    pub claim: Literal,
}

impl Argument {
    pub fn new(support: Vec<Formula>, claim: Literal) -> Self {
        debug_assert!(!support.is_empty(), "an argument needs support");
        Argument { support, claim }
    }

    pub fn symbol(&self) -> String {
        let support: Vec<String> = self.support.iter().map(Formula::symbol).collect();
        format!("⟨{{{}}}, {}⟩", support.join(", "), self.claim.symbol())
    }

    /// Atoms asserted as facts in the support set.
    pub fn facts(&self) -> impl Iterator<Item = &Atom> {
        self.support.iter().filter_map(|f| match f {
            Formula::Fact { literal } if !literal.negated => Some(&literal.atom),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum NodeRole {
    Root,
    Skeptic {
        feature: usize,
    },
    Defense {
        feature: usize,
        direction: Direction,
    },
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub argument: Argument,
    pub role: NodeRole,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    U,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Judgement {
    Warranted,
    Unwarranted,
}

/// Argument tree stored as an arena; node 0 is the root and every child has
/// a larger index than its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgTree {
    nodes: Vec<TreeNode>,
}

impl ArgTree {
    pub fn new(root: Argument) -> Self {
        ArgTree {
            nodes: vec![TreeNode {
                argument: root,
                role: NodeRole::Root,
                children: Vec::new(),
            }],
        }
    }

    /// Attaches `argument` below `parent` and returns the new node id.
    pub fn add_child(&mut self, parent: usize, argument: Argument, role: NodeRole) -> usize {
        assert!(parent < self.nodes.len(), "unknown parent node {parent}");
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            argument,
            role,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(p, n)| n.children.iter().map(move |&c| (p, c)))
            .collect()
    }
}

/// U/D mark of every node, indexed like [`ArgTree::nodes`].
pub fn mark(tree: &ArgTree) -> Vec<Mark> {
    let mut marks = vec![Mark::U; tree.nodes.len()];
    // children always follow their parent, so a reverse sweep is bottom-up
    for id in (0..tree.nodes.len()).rev() {
        if tree.nodes[id].children.iter().any(|&c| marks[c] == Mark::U) {
            marks[id] = Mark::D;
        }
    }
    marks
}

pub fn judge(tree: &ArgTree) -> Judgement {
    match mark(tree)[0] {
        Mark::U => Judgement::Warranted,
        Mark::D => Judgement::Unwarranted,
    }
}

/// Number of skeptic nodes left undefeated.
pub fn undefeated_skeptics(tree: &ArgTree) -> usize {
    let marks = mark(tree);
    tree.nodes
        .iter()
        .zip(&marks)
        .filter(|(n, m)| matches!(n.role, NodeRole::Skeptic { .. }) && **m == Mark::U)
        .count()
}

/// Builds the argument tree for one evaluated explanation.
pub fn build_tree(report: &EvaluationReport) -> ArgTree {
    let mut tree = ArgTree::new(Argument::new(
        vec![Formula::fact(Atom::Trusted)],
        Literal::pos(Atom::Trusted),
    ));

    for verdict in &report.verdicts {
        let name = verdict.display_name();
        let untruthful = Atom::Untruthful {
            feature: verdict.feature_id,
            name: name.clone(),
        };
        let truthful = Atom::Truthful {
            feature: verdict.feature_id,
            name,
        };

        let mut support = vec![
            Formula::fact(untruthful.clone()),
            Formula::implies(
                Literal::pos(untruthful.clone()),
                Literal::neg(Atom::Trusted),
            ),
        ];
        support.extend(
            verdict
                .records
                .iter()
                .filter(|r| !r.matched)
                .map(|r| Formula::fact(Atom::misbehaved(verdict, r))),
        );
        let skeptic = tree.add_child(
            0,
            Argument::new(support, Literal::neg(Atom::Trusted)),
            NodeRole::Skeptic {
                feature: verdict.feature_id,
            },
        );

        // a single contradicted alteration leaves the skeptic standing
        if !verdict.truthful {
            continue;
        }
        for record in &verdict.records {
            let evidence = Atom::as_expected(verdict, record);
            let defense = Argument::new(
                vec![
                    Formula::fact(evidence.clone()),
                    Formula::implies(Literal::pos(evidence), Literal::pos(truthful.clone())),
                    Formula::implies(
                        Literal::pos(truthful.clone()),
                        Literal::neg(untruthful.clone()),
                    ),
                ],
                Literal::neg(untruthful.clone()),
            );
            tree.add_child(
                skeptic,
                defense,
                NodeRole::Defense {
                    feature: verdict.feature_id,
                    direction: record.direction,
                },
            );
        }
    }
    tree
}

/// Indented text: one argument per line followed by its fact sentences.
pub fn render_text(tree: &ArgTree, style: PredictionStyle) -> String {
    let marks = mark(tree);
    let mut out = String::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((id, depth)) = stack.pop() {
        let node = &tree.nodes[id];
        let indent = "  ".repeat(depth);
        let _ = writeln!(out, "{indent}[{:?}] {}", marks[id], node.argument.symbol());
        for atom in node.argument.facts() {
            let _ = writeln!(out, "{indent}    {}: {}", atom.symbol(), atom.render(style));
        }
        for &child in node.children.iter().rev() {
            stack.push((child, depth + 1));
        }
    }
    let _ = writeln!(out, "Verdict: {:?}", judge(tree));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    #[serde(flatten)]
    pub role: NodeRole,
    pub argument: String,
    pub support: Vec<Formula>,
    pub claim: Literal,
    pub sentences: Vec<String>,
}

/// Serializable form `{nodes, edges, marks, verdict}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub instance_id: String,
    pub explainer: String,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<(usize, usize)>,
    pub marks: Vec<Mark>,
    pub verdict: Judgement,
}

impl TreeDocument {
    pub fn new(report: &EvaluationReport, tree: &ArgTree, style: PredictionStyle) -> Self {
        let nodes = tree
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeDocument {
                id,
                role: n.role,
                argument: n.argument.symbol(),
                support: n.argument.support.clone(),
                claim: n.argument.claim.clone(),
                sentences: n.argument.facts().map(|a| a.render(style)).collect(),
            })
            .collect();
        TreeDocument {
            instance_id: report.instance_id.clone(),
            explainer: report.explainer.clone(),
            nodes,
            edges: tree.edges(),
            marks: mark(tree),
            verdict: judge(tree),
        }
    }
}
