//! Implicit factor matrices built from small operator trees.

mod apply;
mod doubling;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, DESK_CAP};
use crate::error::{check_len, Error, Result};
use crate::structured::StructuredOp;
use crate::C64;

/// A factor matrix with `nrows()` rows described by an operator tree.
///
/// `PermutedCopy` prefixes read as a matrix product: `[P1, P2]` means `P1·P2·child`.
/// `Doubling { levels: [l1, .., lL] }` stands for the recursion
/// `M_s = [M_{s−1}, E_{ls}·F_{ls}·M_{s−1}]` starting from `M_0 = child`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FactorNode {
    BaseVector {
        v: Vec<C64>,
    },
    ShiftExpand {
        v: Vec<C64>,
        shift: StructuredOp,
        count: usize,
    },
    ScaledIdentity {
        s: f64,
        n: usize,
    },
    PermutedCopy {
        child: Arc<FactorNode>,
        prefix: Vec<StructuredOp>,
    },
    Concat {
        nrows: usize,
        children: Vec<Arc<FactorNode>>,
    },
    UnitaryPrefix {
        child: Arc<FactorNode>,
        depth: usize,
    },
    DenseBlock {
        m: DenseMatrix,
    },
    Doubling {
        child: Arc<FactorNode>,
        levels: Vec<usize>,
    },
}

fn finite(v: &[C64]) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Rejected("non-finite factor entry".into()))
    }
}

impl FactorNode {
    pub fn base_vector(v: Vec<C64>) -> Result<Self> {
        let node = FactorNode::BaseVector { v };
        node.validate_node()?;
        Ok(node)
    }

    pub fn shift_expand(v: Vec<C64>, shift: StructuredOp, count: usize) -> Result<Self> {
        let node = FactorNode::ShiftExpand { v, shift, count };
        node.validate_node()?;
        Ok(node)
    }

    pub fn scaled_identity(s: f64, n: usize) -> Result<Self> {
        let node = FactorNode::ScaledIdentity { s, n };
        node.validate_node()?;
        Ok(node)
    }

    pub fn permuted_copy(child: FactorNode, prefix: Vec<StructuredOp>) -> Result<Self> {
        let node = FactorNode::PermutedCopy {
            child: Arc::new(child),
            prefix,
        };
        node.validate_node()?;
        Ok(node)
    }

    pub fn concat(nrows: usize, children: Vec<FactorNode>) -> Result<Self> {
        let node = FactorNode::Concat {
            nrows,
            children: children.into_iter().map(Arc::new).collect(),
        };
        node.validate_node()?;
        Ok(node)
    }

    /// An n-row factor with no columns.
    pub fn empty(nrows: usize) -> Self {
        FactorNode::Concat {
            nrows,
            children: Vec::new(),
        }
    }

    pub fn unitary_prefix(child: FactorNode, depth: usize) -> Result<Self> {
        let node = FactorNode::UnitaryPrefix {
            child: Arc::new(child),
            depth,
        };
        node.validate_node()?;
        Ok(node)
    }

    pub fn dense_block(m: DenseMatrix) -> Self {
        FactorNode::DenseBlock { m }
    }

    pub fn doubling(child: FactorNode, levels: Vec<usize>) -> Result<Self> {
        let node = FactorNode::Doubling {
            child: Arc::new(child),
            levels,
        };
        node.validate_node()?;
        Ok(node)
    }

    pub fn nrows(&self) -> usize {
        use FactorNode::*;
        match self {
            BaseVector { v } | ShiftExpand { v, .. } => v.len(),
            ScaledIdentity { n, .. } => *n,
            PermutedCopy { child, .. } | UnitaryPrefix { child, .. } | Doubling { child, .. } => {
                child.nrows()
            }
            Concat { nrows, .. } => *nrows,
            DenseBlock { m } => m.rows(),
        }
    }

    pub fn ncols(&self) -> usize {
        use FactorNode::*;
        match self {
            BaseVector { .. } => 1,
            ShiftExpand { count, .. } => *count,
            ScaledIdentity { n, .. } => *n,
            PermutedCopy { child, .. } | UnitaryPrefix { child, .. } => child.ncols(),
            Concat { children, .. } => children.iter().map(|c| c.ncols()).sum(),
            DenseBlock { m } => m.cols(),
            Doubling { child, levels } => child.ncols() << levels.len(),
        }
    }

    /// Number of scalars held by the tree.
    pub fn storage(&self) -> usize {
        use FactorNode::*;
        match self {
            BaseVector { v } | ShiftExpand { v, .. } => v.len(),
            ScaledIdentity { .. } => 1,
            PermutedCopy { child, prefix } => child.storage() + prefix.len(),
            UnitaryPrefix { child, .. } => child.storage() + 1,
            Doubling { child, levels } => child.storage() + levels.len(),
            Concat { children, .. } => children.iter().map(|c| c.storage()).sum(),
            DenseBlock { m } => m.entries().len(),
        }
    }

    fn validate_node(&self) -> Result<()> {
        use FactorNode::*;
        let n = self.nrows();
        match self {
            BaseVector { v } => finite(v),
            ShiftExpand { v, shift, count } => {
                finite(v)?;
                shift.validate()?;
                check_len(v.len(), shift.size())?;
                let limit = match *shift {
                    StructuredOp::ShiftDown { n } | StructuredOp::ShiftUp { n } => n,
                    StructuredOp::BlockShift { block, .. }
                    | StructuredOp::BlockShiftUp { block, .. } => block,
                    other => {
                        return Err(Error::Rejected(format!(
                            "ShiftExpand needs a shift operator, got {other:?}"
                        )))
                    }
                };
                if *count == 0 || *count > limit {
                    return Err(Error::Rejected(format!(
                        "ShiftExpand count {count} outside 1..={limit}"
                    )));
                }
                Ok(())
            }
            ScaledIdentity { s, .. } => {
                if s.is_finite() && *s >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Rejected(format!("ScaledIdentity scale {s} must be >= 0")))
                }
            }
            PermutedCopy { prefix, .. } => {
                for op in prefix {
                    op.validate()?;
                    check_len(n, op.size())?;
                }
                Ok(())
            }
            Concat { nrows, children } => {
                for c in children {
                    check_len(*nrows, c.nrows())?;
                }
                Ok(())
            }
            UnitaryPrefix { depth, .. } => {
                for t in 1..=*depth {
                    StructuredOp::BlockFoldUnitary { n, level: t }.validate()?;
                }
                Ok(())
            }
            DenseBlock { m } => finite(m.entries()),
            Doubling { levels, .. } => {
                for &l in levels {
                    StructuredOp::SwapF { n, level: l }.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Checks every node (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        use FactorNode::*;
        self.validate_node()?;
        match self {
            PermutedCopy { child, .. } | UnitaryPrefix { child, .. } | Doubling { child, .. } => {
                child.validate()
            }
            Concat { children, .. } => children.iter().try_for_each(|c| c.validate()),
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FactorDocument::from(self.clone()))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FactorDocument = serde_json::from_str(text)?;
        doc.into_node()
    }

    /// Dense materialization under the default cap.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.materialize_with_cap(DESK_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.nrows();
        if n > cap {
            return Err(Error::SizeCap { size: n, cap });
        }
        let cols = self.columns();
        DenseMatrix::from_columns(n, &cols)
    }
}

/// `{ "nrows": n, "tree": … }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorDocument {
    pub nrows: usize,
    pub tree: FactorNode,
}

impl From<FactorNode> for FactorDocument {
    fn from(tree: FactorNode) -> Self {
        FactorDocument {
            nrows: tree.nrows(),
            tree,
        }
    }
}

impl FactorDocument {
    pub fn into_node(self) -> Result<FactorNode> {
        self.tree.validate()?;
        check_len(self.nrows, self.tree.nrows())?;
        Ok(self.tree)
    }
}

/// Target matrix B·B* − C·C*, truncated to the leading `source_order` block.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub b: FactorNode,
    pub c: FactorNode,
    pub source_order: usize,
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PairDocument {
    #[serde(rename = "B")]
    b: FactorDocument,
    #[serde(rename = "C")]
    c: FactorDocument,
    source_order: usize,
    provenance: String,
}

impl FactorPair {
    pub fn new(b: FactorNode, c: FactorNode, source_order: usize, provenance: &str) -> Result<Self> {
        check_len(b.nrows(), c.nrows())?;
        if source_order > b.nrows() {
            return Err(Error::Rejected(format!(
                "source order {source_order} exceeds factor rows {}",
                b.nrows()
            )));
        }
        Ok(FactorPair {
            b,
            c,
            source_order,
            provenance: provenance.to_string(),
        })
    }

    /// Rows of the (possibly padded) factors.
    pub fn nrows(&self) -> usize {
        self.b.nrows()
    }

    pub fn order(&self) -> usize {
        self.source_order
    }

    /// (B·B* − C·C*)·x for x of length `source_order`.
    pub fn apply_gram(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.source_order, x.len())?;
        let mut xp = x.to_vec();
        xp.resize(self.nrows(), C64::new(0.0, 0.0));
        let mut y = self.b.apply(&self.b.adjoint_apply(&xp)?)?;
        let z = self.c.apply(&self.c.adjoint_apply(&xp)?)?;
        for (a, b) in y.iter_mut().zip(&z) {
            *a -= b;
        }
        y.truncate(self.source_order);
        Ok(y)
    }

    /// Dense B·B* − C·C* restricted to the leading source-order block.
    pub fn materialize_target(&self) -> Result<DenseMatrix> {
        self.materialize_target_with_cap(DESK_CAP)
    }

    pub fn materialize_target_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        let b = self.b.materialize_with_cap(cap)?;
        let c = self.c.materialize_with_cap(cap)?;
        let s = self.source_order;
        let b = b.submatrix(0, 0, s, b.cols());
        let c = c.submatrix(0, 0, s, c.cols());
        DenseMatrix::gram_difference(&b, &c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PairDocument {
            b: self.b.clone().into(),
            c: self.c.clone().into(),
            source_order: self.source_order,
            provenance: self.provenance.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PairDocument = serde_json::from_str(text)?;
        let b = doc.b.into_node()?;
        let c = doc.c.into_node()?;
        FactorPair::new(b, c, doc.source_order, &doc.provenance)
    }
}

/// Concat of the non-empty parts, unwrapped when only one part remains.
pub(crate) fn concat_nonempty(nrows: usize, parts: Vec<FactorNode>) -> Result<FactorNode> {
    let mut parts: Vec<FactorNode> = parts.into_iter().filter(|p| p.ncols() > 0).collect();
    if parts.len() == 1 {
        return Ok(parts.pop().unwrap());
    }
    FactorNode::concat(nrows, parts)
}
