use super::ClassId;

/// Disjoint sets with union by rank, path compression and a class label
/// carried by each root.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    root_label: Vec<Option<ClassId>>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            root_label: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Label of the component containing `x`.
    pub fn label(&mut self, x: usize) -> Option<ClassId> {
        let r = self.find(x);
        self.root_label[r]
    }

    /// Labels the component containing `x`. Panics if it already carries a
    /// different label.
    pub fn set_label(&mut self, x: usize, class: ClassId) {
        let r = self.find(x);
        match self.root_label[r] {
            Some(c) if c != class => panic!("component of {x} already labelled {c}, not {class}"),
            _ => self.root_label[r] = Some(class),
        }
    }

    /// Merges the components of `a` and `b` and returns the new root. Panics
    /// when they carry different labels.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let label = match (self.root_label[ra], self.root_label[rb]) {
            (Some(x), Some(y)) if x != y => {
                panic!("refusing to merge components labelled {x} and {y}")
            }
            (x, y) => x.or(y),
        };
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] = self.rank[ra].saturating_add(1);
        }
        self.root_label[rb] = None;
        self.root_label[ra] = label;
        ra
    }
}
