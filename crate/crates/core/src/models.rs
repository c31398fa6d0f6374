//! Generators for the four-corner iterate `K_n`, the Sierpiński Cantor iterate
//! `S_n` and the random four-corner model.
//!
//! Cells live on an integer lattice: a level-`n` tree measures coordinates in
//! units of `4^-n` (squares) or `3^-n` (triangles, in the basis
//! `e1 = (1, 0)`, `e2 = (1/2, √3/2)`). Engines work on the lattice form;
//! [`Square`] and [`Triangle`] are the Cartesian views.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(rename = "fourcorner")]
    FourCorner,
    Sierpinski,
    Random,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FourCorner => "fourcorner",
            ModelKind::Sierpinski => "sierpinski",
            ModelKind::Random => "random",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fourcorner" => Ok(ModelKind::FourCorner),
            "sierpinski" => Ok(ModelKind::Sierpinski),
            "random" => Ok(ModelKind::Random),
            other => Err(Error::InvalidInput(format!("unknown model `{other}`"))),
        }
    }
}

/// A model together with its seed. The seed only matters for
/// [`ModelKind::Random`] and is normalized to 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelId {
    pub kind: ModelKind,
    pub seed: u64,
}

impl ModelId {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let seed = if kind == ModelKind::Random { seed } else { 0 };
        Self { kind, seed }
    }

    pub const fn four_corner() -> Self {
        Self {
            kind: ModelKind::FourCorner,
            seed: 0,
        }
    }

    pub const fn sierpinski() -> Self {
        Self {
            kind: ModelKind::Sierpinski,
            seed: 0,
        }
    }

    pub const fn random(seed: u64) -> Self {
        Self {
            kind: ModelKind::Random,
            seed,
        }
    }

    pub fn is_triangular(&self) -> bool {
        self.kind == ModelKind::Sierpinski
    }

    /// Children per cell.
    pub fn branching(&self) -> u64 {
        if self.is_triangular() {
            3
        } else {
            4
        }
    }

    /// Lattice basis `(e1, e2)` in Cartesian coordinates.
    pub fn lattice_basis(&self) -> ([f64; 2], [f64; 2]) {
        if self.is_triangular() {
            ([1.0, 0.0], [0.5, SQRT3_2])
        } else {
            ([1.0, 0.0], [0.0, 1.0])
        }
    }

    /// Number of level-`n` cells.
    pub fn cell_count(&self, n: u32) -> u64 {
        self.branching().pow(n)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Random => write!(f, "random(seed={})", self.seed),
            k => f.write_str(k.name()),
        }
    }
}

/// Digit words `(a_1..a_n)`, `(b_1..b_n)` over `{0, 3}` naming a level-`n`
/// square of `K_n` with corner `(Σ a_j 4^-j, Σ b_j 4^-j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SquareAddress {
    pub a_digits: Vec<u8>,
    pub b_digits: Vec<u8>,
}

impl SquareAddress {
    pub fn new(a_digits: Vec<u8>, b_digits: Vec<u8>) -> Result<Self> {
        if a_digits.len() != b_digits.len() {
            return Err(Error::InvalidInput("digit words differ in length".into()));
        }
        if a_digits.iter().chain(&b_digits).any(|&d| d != 0 && d != 3) {
            return Err(Error::InvalidInput("digits must be 0 or 3".into()));
        }
        Ok(Self { a_digits, b_digits })
    }

    /// Address of the `index`-th square in lexicographic digit order. The
    /// level-`j` quadrant digit is `q_j = 2·(a_j/3) + b_j/3`.
    pub fn from_index(n: u32, index: u64) -> Self {
        let mut a = Vec::with_capacity(n as usize);
        let mut b = Vec::with_capacity(n as usize);
        for j in (0..n).rev() {
            let q = (index >> (2 * j)) & 3;
            a.push(3 * (q >> 1) as u8);
            b.push(3 * (q & 1) as u8);
        }
        Self {
            a_digits: a,
            b_digits: b,
        }
    }

    pub fn level(&self) -> u32 {
        self.a_digits.len() as u32
    }

    /// Inverse of [`SquareAddress::from_index`].
    pub fn index(&self) -> u64 {
        self.a_digits
            .iter()
            .zip(&self.b_digits)
            .fold(0, |acc, (&a, &b)| 4 * acc + 2 * (a / 3) as u64 + (b / 3) as u64)
    }

    /// Corner in units of `4^-n`.
    pub fn corner_units(&self) -> (i64, i64) {
        let fold = |w: &[u8]| w.iter().fold(0i64, |acc, &d| 4 * acc + d as i64);
        (fold(&self.a_digits), fold(&self.b_digits))
    }

    pub fn square(&self) -> Square {
        let scale = 4f64.powi(-(self.level() as i32));
        let (x, y) = self.corner_units();
        Square {
            corner: [x as f64 * scale, y as f64 * scale],
            side: scale,
        }
    }
}

impl fmt::Display for SquareAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = |w: &[u8]| w.iter().map(|d| char::from(b'0' + d)).collect::<String>();
        write!(f, "a={};b={}", word(&self.a_digits), word(&self.b_digits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub corner: [f64; 2],
    pub side: f64,
}

impl Square {
    pub fn vertices(&self) -> [[f64; 2]; 4] {
        let [x, y] = self.corner;
        let s = self.side;
        [[x, y], [x + s, y], [x, y + s], [x + s, y + s]]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.corner[0] + 0.5 * self.side,
            self.corner[1] + 0.5 * self.side,
        ]
    }

    pub fn contains_square(&self, other: &Square) -> bool {
        other.corner[0] >= self.corner[0]
            && other.corner[1] >= self.corner[1]
            && other.corner[0] + other.side <= self.corner[0] + self.side
            && other.corner[1] + other.side <= self.corner[1] + self.side
    }
}

/// Upward equilateral triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub vertices: [[f64; 2]; 3],
}

impl Triangle {
    pub fn side(&self) -> f64 {
        self.vertices[1][0] - self.vertices[0][0]
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.vertices;
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }
}

/// A cell of either shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Square(Square),
    Triangle(Triangle),
}

impl Cell {
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            Cell::Square(s) => s.vertices().to_vec(),
            Cell::Triangle(t) => t.vertices.to_vec(),
        }
    }
}

/// A node of the construction tree in lattice units of the final level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub x: i64,
    pub y: i64,
    /// Side length in lattice units (`base^(n - level)`).
    pub size: i64,
    pub level: u32,
    /// Index among the level-`level` nodes in lexicographic digit order.
    pub path: u64,
}

/// Construction tree of a model truncated at level `n`.
#[derive(Debug, Clone, Copy)]
pub struct CellTree {
    pub model: ModelId,
    pub n: u32,
}

/// Up to four children, stored inline.
#[derive(Debug, Clone, Copy)]
pub struct Children {
    nodes: [Node; 4],
    len: usize,
}

impl Children {
    pub fn as_slice(&self) -> &[Node] {
        &self.nodes[..self.len]
    }
}

/// Sub-cell `(i, j)` of quadrant `q` picked by the random model when
/// refining the node at `path` of generation `generation - 1`. Keyed
/// counter-style into SplitMix64 so any subtree can be generated on its own.
pub fn random_choice(seed: u64, generation: u32, child_path: u64) -> (i64, i64) {
    let key = ((generation as u64) << 57) | child_path;
    let bits = SplitMix64::at(seed, key.wrapping_add(1)) >> 62;
    ((bits >> 1) as i64, (bits & 1) as i64)
}

impl CellTree {
    pub fn new(model: ModelId, n: u32) -> Self {
        Self { model, n }
    }

    /// Lattice units per unit length (`base^n`).
    pub fn denominator(&self) -> i64 {
        let base: i64 = if self.model.is_triangular() { 3 } else { 4 };
        base.pow(self.n)
    }

    pub fn root(&self) -> Node {
        Node {
            x: 0,
            y: 0,
            size: self.denominator(),
            level: 0,
            path: 0,
        }
    }

    pub fn is_leaf(&self, node: &Node) -> bool {
        node.level >= self.n
    }

    pub fn children(&self, node: &Node) -> Children {
        let mut out = Children {
            nodes: [*node; 4],
            len: 0,
        };
        if self.is_leaf(node) {
            return out;
        }
        let level = node.level + 1;
        match self.model.kind {
            ModelKind::Sierpinski => {
                let third = node.size / 3;
                for (q, (dx, dy)) in [(0, 0), (2, 0), (0, 2)].into_iter().enumerate() {
                    out.nodes[q] = Node {
                        x: node.x + dx * third,
                        y: node.y + dy * third,
                        size: third,
                        level,
                        path: node.path * 3 + q as u64,
                    };
                }
                out.len = 3;
            }
            kind => {
                let quarter = node.size / 4;
                for q in 0..4u64 {
                    let qx = (q >> 1) as i64;
                    let qy = (q & 1) as i64;
                    let path = node.path * 4 + q;
                    let (i, j) = if kind == ModelKind::FourCorner {
                        (qx, qy)
                    } else {
                        random_choice(self.model.seed, level, path)
                    };
                    out.nodes[q as usize] = Node {
                        x: node.x + (2 * qx + i) * quarter,
                        y: node.y + (2 * qy + j) * quarter,
                        size: quarter,
                        level,
                        path,
                    };
                }
                out.len = 4;
            }
        }
        out
    }

    /// The level-`level` node with the given lexicographic index, found by
    /// descending from the root. Used to partition the leaves by prefix.
    pub fn node_at(&self, level: u32, path: u64) -> Node {
        let b = self.model.branching();
        let mut node = self.root();
        for depth in (0..level).rev() {
            let digit = (path / b.pow(depth)) % b;
            node = self.children(&node).as_slice()[digit as usize];
        }
        node
    }

    /// Leaves in lexicographic digit order, generated lazily.
    pub fn leaves(&self) -> Leaves {
        self.leaves_under(self.root())
    }

    /// Leaves below `node`.
    pub fn leaves_under(&self, node: Node) -> Leaves {
        Leaves {
            tree: *self,
            stack: vec![node],
        }
    }

    /// Lattice vertices of a node.
    pub fn vertices(&self, node: &Node) -> ([(i64, i64); 4], usize) {
        let (x, y, s) = (node.x, node.y, node.size);
        if self.model.is_triangular() {
            ([(x, y), (x + s, y), (x, y + s), (x, y)], 3)
        } else {
            ([(x, y), (x + s, y), (x, y + s), (x + s, y + s)], 4)
        }
    }

    /// Cartesian coordinates of a lattice point.
    pub fn to_cartesian(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.denominator() as f64;
        let (e1, e2) = self.model.lattice_basis();
        [(x * e1[0] + y * e2[0]) / d, (x * e1[1] + y * e2[1]) / d]
    }

    pub fn cell(&self, node: &Node) -> Cell {
        let d = self.denominator() as f64;
        if self.model.is_triangular() {
            let (v, _) = self.vertices(node);
            Cell::Triangle(Triangle {
                vertices: [
                    self.to_cartesian(v[0].0 as f64, v[0].1 as f64),
                    self.to_cartesian(v[1].0 as f64, v[1].1 as f64),
                    self.to_cartesian(v[2].0 as f64, v[2].1 as f64),
                ],
            })
        } else {
            Cell::Square(Square {
                corner: [node.x as f64 / d, node.y as f64 / d],
                side: node.size as f64 / d,
            })
        }
    }

    /// Cell center (square center or triangle centroid) in Cartesian coordinates.
    pub fn center(&self, node: &Node) -> [f64; 2] {
        let s = node.size as f64;
        let offset = if self.model.is_triangular() { s / 3.0 } else { s / 2.0 };
        self.to_cartesian(node.x as f64 + offset, node.y as f64 + offset)
    }
}

/// Depth-first leaf iterator.
#[derive(Debug, Clone)]
pub struct Leaves {
    tree: CellTree,
    stack: Vec<Node>,
}

impl Iterator for Leaves {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        while let Some(node) = self.stack.pop() {
            if self.tree.is_leaf(&node) {
                return Some(node);
            }
            let kids = self.tree.children(&node);
            self.stack.extend(kids.as_slice().iter().rev());
        }
        None
    }
}

/// The `4^n` squares of a square model, in lexicographic digit order.
pub fn enumerate_squares(model: ModelId, n: u32) -> Result<impl Iterator<Item = Square>> {
    if model.is_triangular() {
        return Err(Error::WrongModel {
            op: "enumerate_squares",
            model: model.kind.name(),
        });
    }
    let tree = CellTree::new(model, n);
    Ok(tree.leaves().map(move |node| match tree.cell(&node) {
        Cell::Square(s) => s,
        Cell::Triangle(_) => unreachable!(),
    }))
}

/// The `3^n` triangles of `S_n`.
pub fn enumerate_triangles(n: u32) -> impl Iterator<Item = Triangle> {
    let tree = CellTree::new(ModelId::sierpinski(), n);
    tree.leaves().map(move |node| match tree.cell(&node) {
        Cell::Triangle(t) => t,
        Cell::Square(_) => unreachable!(),
    })
}

/// Center difference along one axis between two level-`n` squares of `K_n`:
/// `units = Σ d_j 4^(n-j)`, `d_j ∈ {-3, 0, 3}`; `count` ordered pairs of
/// digit words realize it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisDifference {
    pub units: i64,
    pub count: u64,
}

/// All `3^n` axis differences in lexicographic word order (digit order -3, 0, 3).
pub fn axis_differences(n: u32) -> Vec<AxisDifference> {
    let mut list = vec![AxisDifference { units: 0, count: 1 }];
    for _ in 0..n {
        list = list
            .iter()
            .flat_map(|d| {
                [(-3, 1), (0, 2), (3, 1)].map(|(digit, m)| AxisDifference {
                    units: 4 * d.units + digit,
                    count: d.count * m,
                })
            })
            .collect();
    }
    list
}

/// A translation class of ordered pairs of level-`n` squares of `K_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceClass {
    /// Center difference `c(Q') - c(Q)`.
    pub delta: [f64; 2],
    /// The same difference in units of `4^-n`.
    pub units: (i64, i64),
    pub ordered_pair_count: u64,
}

/// Every ordered pair of level-`n` squares falls in exactly one class; the
/// counts sum to `16^n`.
pub fn difference_classes(
    model: ModelId,
    n: u32,
) -> Result<impl Iterator<Item = DifferenceClass>> {
    if model.kind != ModelKind::FourCorner {
        return Err(Error::WrongModel {
            op: "difference_classes",
            model: model.kind.name(),
        });
    }
    let axis = axis_differences(n);
    let scale = 4f64.powi(-(n as i32));
    let ys = axis.clone();
    Ok(axis.into_iter().flat_map(move |dx| {
        ys.clone().into_iter().map(move |dy| DifferenceClass {
            delta: [dx.units as f64 * scale, dy.units as f64 * scale],
            units: (dx.units, dy.units),
            ordered_pair_count: dx.count * dy.count,
        })
    }))
}

/// Point mass of the natural measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: [f64; 2],
    pub mass: f64,
}

/// One atom per cell center with mass `1 / cell_count`.
pub fn natural_measure_atoms(model: ModelId, n: u32) -> impl Iterator<Item = Atom> {
    let tree = CellTree::new(model, n);
    let mass = 1.0 / model.cell_count(n) as f64;
    tree.leaves().map(move |node| Atom {
        point: tree.center(&node),
        mass,
    })
}
