//! Per-operator semantics: how each operator mutates a namespace.

use super::{
    BlockRed, DesignError, ImplChoices, LevelBlocks, MetaEntry, Namespace, PadInfo, ThreadRed,
    WarpRed,
};
use crate::opgraph::{BlockFlavor, Level, OperatorKind, OperatorNode, PadScope};
use crate::scalar::Scalar;

fn err(node: &OperatorNode, msg: impl Into<String>) -> DesignError {
    DesignError::Op {
        node: node.id,
        kind: node.kind,
        msg: msg.into(),
    }
}

fn require_int(node: &OperatorNode, key: &str) -> Result<i64, DesignError> {
    node.params
        .get(key)
        .and_then(|v| v.as_int())
        .ok_or_else(|| err(node, format!("missing integer parameter `{key}`")))
}

fn require_array<'a>(node: &'a OperatorNode, key: &str) -> Result<&'a [i64], DesignError> {
    node.params
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| err(node, format!("missing array parameter `{key}`")))
}

fn require_scope(node: &OperatorNode) -> Result<PadScope, DesignError> {
    match node.params.get("scope").and_then(|v| v.as_enum()) {
        Some("per_bmtb") => Ok(PadScope::PerBmtb),
        Some("global") => Ok(PadScope::Global),
        _ => Err(err(node, "missing enum parameter `scope`")),
    }
}

/// Applies a non-dividing operator in place.
pub(super) fn apply<T: Scalar>(
    ns: &mut Namespace<T>,
    node: &OperatorNode,
) -> Result<(), DesignError> {
    use OperatorKind::*;
    match node.kind {
        Compress => op_compress(ns, node),
        Sort => op_sort(ns, node),
        SortSub => op_sort_sub(ns, node),
        Bin => op_bin(ns, node),
        BmtbRowBlock | BmtbNnzBlock | BmwRowBlock | BmwNnzBlock | BmtRowBlock | BmtNnzBlock => {
            let (level, flavor) = node.kind.blocking().unwrap();
            op_block(ns, node, level, flavor)
        }
        BmtPad => op_bmt_pad(ns, node),
        SortBmtb => op_sort_bmtb(ns, node),
        SetResources | ThreadTotalRed | ThreadBitmapRed | WarpTotalRed | WarpBitmapRed
        | WarpSegRed | ShmemTotalRed | ShmemOffsetRed | GmemAtomRed => {
            record_impl_choice(ns, node)
        }
        RowDiv | ColDiv => unreachable!("division handled by split()"),
    }
}

/// Splits a namespace into stripes for ROW_DIV / COL_DIV.
pub(super) fn split<T: Scalar>(
    ns: &Namespace<T>,
    node: &OperatorNode,
) -> Result<Vec<Namespace<T>>, DesignError> {
    match node.kind {
        OperatorKind::RowDiv => op_row_div(ns, node),
        OperatorKind::ColDiv => op_col_div(ns, node),
        _ => unreachable!("split() only handles division operators"),
    }
}

/// COMPRESS closes the converting stage: nonzeros are kept left-aligned per
/// row (entry order is (row, position-within-row), which ingestion already
/// guarantees) and the per-row lengths become part of the metadata.
fn op_compress<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    ns.record("row_lengths", node.id);
    Ok(())
}

/// Reorders rows; `new_order[k]` is the old local row placed at position k.
fn permute_rows<T: Scalar>(ns: &mut Namespace<T>, new_order: &[usize]) {
    debug_assert_eq!(new_order.len(), ns.n_local_rows);
    debug_assert!(ns.pad.is_none(), "row permutation after padding is unsupported");
    let starts = ns.row_starts();
    let n = ns.rows.len();
    let mut rows = Vec::with_capacity(n);
    let mut cols = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut pads = Vec::with_capacity(n);
    for (new_r, &old_r) in new_order.iter().enumerate() {
        for i in starts[old_r] as usize..starts[old_r + 1] as usize {
            rows.push(new_r as i64);
            cols.push(ns.cols[i]);
            values.push(ns.values[i]);
            pads.push(ns.pads[i]);
        }
    }
    ns.rows = rows;
    ns.cols = cols;
    ns.values = values;
    ns.pads = pads;
    ns.origin_rows = new_order.iter().map(|&o| ns.origin_rows[o]).collect();
    ns.row_lengths = new_order.iter().map(|&o| ns.row_lengths[o]).collect();
}

/// SORT: rows permuted by descending length, stable.
fn op_sort<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    let mut order: Vec<usize> = (0..ns.n_local_rows).collect();
    order.sort_by_key(|&r| -ns.row_lengths[r]);
    permute_rows(ns, &order);
    ns.record("origin_rows", node.id);
    Ok(())
}

/// SORT_SUB: descending-length sort within consecutive groups of
/// `group_size` rows, grouped on the current row order.
fn op_sort_sub<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    let g = require_int(node, "group_size")?;
    if g < 2 {
        return Err(err(node, "`group_size` must be >= 2"));
    }
    let mut order: Vec<usize> = (0..ns.n_local_rows).collect();
    for chunk in order.chunks_mut(g as usize) {
        chunk.sort_by_key(|&r| -ns.row_lengths[r]);
    }
    permute_rows(ns, &order);
    ns.record("origin_rows", node.id);
    Ok(())
}

/// BIN: rows stably grouped by the first threshold bin their length falls
/// below (`len <= thresholds[i]`), longest lengths in the final bin.
fn op_bin<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    let thresholds = require_array(node, "thresholds")?.to_vec();
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(err(node, "thresholds must be strictly ascending"));
    }
    let n_bins = thresholds.len() + 1;
    let bin_of = |len: i64| -> usize {
        thresholds
            .iter()
            .position(|&t| len <= t)
            .unwrap_or(n_bins - 1)
    };
    let mut order: Vec<usize> = (0..ns.n_local_rows).collect();
    order.sort_by_key(|&r| bin_of(ns.row_lengths[r]));
    let mut counts = vec![0i64; n_bins];
    for r in 0..ns.n_local_rows {
        counts[bin_of(ns.row_lengths[r])] += 1;
    }
    let mut offsets = Vec::with_capacity(n_bins + 1);
    offsets.push(0i64);
    for c in counts {
        offsets.push(offsets.last().unwrap() + c);
    }
    permute_rows(ns, &order);
    ns.bin_offsets = Some(offsets);
    ns.record("origin_rows", node.id);
    ns.record("bin_offsets", node.id);
    Ok(())
}

/// ROW_DIV: stripes of consecutive rows with re-based local row indices.
fn op_row_div<T: Scalar>(
    ns: &Namespace<T>,
    node: &OperatorNode,
) -> Result<Vec<Namespace<T>>, DesignError> {
    let cuts = require_array(node, "cuts")?;
    let n = ns.n_local_rows as i64;
    if cuts.windows(2).any(|w| w[1] <= w[0]) || cuts.iter().any(|&c| c < 1 || c >= n) {
        return Err(err(node, format!("cuts must be strictly increasing within [1, {})", n)));
    }
    let mut bounds = vec![0i64];
    bounds.extend_from_slice(cuts);
    bounds.push(n);
    let starts = ns.row_starts();
    let mut stripes = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        let (ea, eb) = (starts[a] as usize, starts[b] as usize);
        let mut stripe = ns.clone();
        stripe.rows = ns.rows[ea..eb].iter().map(|&r| r - a as i64).collect();
        stripe.cols = ns.cols[ea..eb].to_vec();
        stripe.values = ns.values[ea..eb].to_vec();
        stripe.pads = ns.pads[ea..eb].to_vec();
        stripe.n_local_rows = b - a;
        stripe.origin_rows = ns.origin_rows[a..b].to_vec();
        stripe.row_lengths = ns.row_lengths[a..b].to_vec();
        stripe.record("origin_rows", node.id);
        stripes.push(stripe);
    }
    Ok(stripes)
}

/// COL_DIV: stripes over column ranges; rows without entries in a stripe
/// are compacted away, every stripe contributes partial y values.
fn op_col_div<T: Scalar>(
    ns: &Namespace<T>,
    node: &OperatorNode,
) -> Result<Vec<Namespace<T>>, DesignError> {
    let cuts = require_array(node, "cuts")?;
    let (c0, c1) = ns.col_range;
    if cuts.windows(2).any(|w| w[1] <= w[0]) || cuts.iter().any(|&c| c <= c0 || c >= c1) {
        return Err(err(node, format!("cuts must be strictly increasing within ({c0}, {c1})")));
    }
    let mut bounds = vec![c0];
    bounds.extend_from_slice(cuts);
    bounds.push(c1);
    let mut stripes = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (ca, cb) = (w[0], w[1]);
        let keep: Vec<usize> = (0..ns.cols.len())
            .filter(|&i| ns.cols[i] >= ca && ns.cols[i] < cb)
            .collect();
        // compact non-empty local rows, ascending
        let mut row_map = vec![-1i64; ns.n_local_rows];
        let mut next = 0i64;
        for &i in &keep {
            let r = ns.rows[i] as usize;
            if row_map[r] < 0 {
                row_map[r] = next;
                next += 1;
            }
        }
        let mut stripe = ns.clone();
        stripe.rows = keep.iter().map(|&i| row_map[ns.rows[i] as usize]).collect();
        stripe.cols = keep.iter().map(|&i| ns.cols[i]).collect();
        stripe.values = keep.iter().map(|&i| ns.values[i]).collect();
        stripe.pads = keep.iter().map(|&i| ns.pads[i]).collect();
        stripe.n_local_rows = next as usize;
        let mut origin = vec![0i64; next as usize];
        let mut lengths = vec![0i64; next as usize];
        for (old, &new) in row_map.iter().enumerate() {
            if new >= 0 {
                origin[new as usize] = ns.origin_rows[old];
            }
        }
        for &i in &keep {
            lengths[row_map[ns.rows[i] as usize] as usize] += 1;
        }
        stripe.origin_rows = origin;
        stripe.row_lengths = lengths;
        stripe.col_range = (ca, cb);
        stripe.record("origin_rows", node.id);
        stripes.push(stripe);
    }
    Ok(stripes)
}

/// Parent scopes a blocking operator chunks within: the next coarser level
/// present, or the whole namespace.
fn parent_scopes<T: Scalar>(ns: &Namespace<T>, level: Level) -> Vec<(i64, i64, i64, i64)> {
    // (nz_start, nz_end, row_start, row_end); row bounds only meaningful for
    // row-aligned parents, which legality guarantees for row-flavored blocks
    let parent = match level {
        Level::Bmtb => None,
        Level::Bmw => ns.bmtb.as_ref(),
        Level::Bmt => ns.bmw.as_ref().or(ns.bmtb.as_ref()),
    };
    match parent {
        Some(p) => (0..p.count())
            .map(|i| {
                let (s, e) = p.nz_range(i);
                let (rs, re) = match &p.row_offsets {
                    Some(ro) => (ro[i], ro[i + 1]),
                    None => (p.first_rows[i], p.first_rows[i]),
                };
                (s, e, rs, re)
            })
            .collect(),
        None => vec![(0, ns.rows.len() as i64, 0, ns.n_local_rows as i64)],
    }
}

/// The `_BLOCK` family: cuts adjacent nonzeros into blocks mapped to one
/// parallelism level. Child blocks restart at parent block boundaries.
fn op_block<T: Scalar>(
    ns: &mut Namespace<T>,
    node: &OperatorNode,
    level: Level,
    flavor: BlockFlavor,
) -> Result<(), DesignError> {
    let key = match flavor {
        BlockFlavor::Row => "rows_per_block",
        BlockFlavor::Nnz => "nnz_per_block",
    };
    let size = require_int(node, key)?;
    if size < 1 {
        return Err(err(node, format!("`{key}` must be >= 1")));
    }
    let starts = ns.row_starts();
    let mut nz_offsets = vec![0i64];
    let mut row_offsets = vec![0i64];
    let mut first_rows = Vec::new();
    for (nz_s, nz_e, row_s, row_e) in parent_scopes(ns, level) {
        match flavor {
            BlockFlavor::Row => {
                let mut r = row_s;
                while r < row_e {
                    let r_end = (r + size).min(row_e);
                    first_rows.push(r);
                    row_offsets.push(r_end);
                    nz_offsets.push(starts[r_end as usize]);
                    r = r_end;
                }
            }
            BlockFlavor::Nnz => {
                let mut s = nz_s;
                while s < nz_e {
                    let e = (s + size).min(nz_e);
                    first_rows.push(ns.rows[s as usize]);
                    nz_offsets.push(e);
                    s = e;
                }
            }
        }
    }
    let blocks = LevelBlocks {
        flavor,
        size,
        nz_offsets,
        row_offsets: match flavor {
            BlockFlavor::Row => Some(row_offsets),
            BlockFlavor::Nnz => None,
        },
        first_rows,
    };
    let prefix = match level {
        Level::Bmtb => "bmtb",
        Level::Bmw => "bmw",
        Level::Bmt => "bmt",
    };
    ns.record(&format!("{prefix}_nz_offsets"), node.id);
    match flavor {
        BlockFlavor::Row => ns.record(&format!("{prefix}_row_offsets"), node.id),
        BlockFlavor::Nnz => {
            let first_key = match level {
                Level::Bmtb => "first_row_of_bmtb".to_string(),
                Level::Bmw => "bmw_first_rows".to_string(),
                Level::Bmt => "bmt_first_rows".to_string(),
            };
            ns.record(&first_key, node.id);
        }
    }
    // row-flavored blocks also expose their first row under the first-row key
    if flavor == BlockFlavor::Row && level == Level::Bmtb {
        ns.record("first_row_of_bmtb", node.id);
    }
    match level {
        Level::Bmtb => ns.bmtb = Some(blocks),
        Level::Bmw => {
            if ns.bmtb.is_some() {
                ns.record("bmtb_bmw_offsets", node.id);
            }
            ns.bmw = Some(blocks);
        }
        Level::Bmt => {
            if ns.bmw.is_some() {
                ns.record("bmw_bmt_offsets", node.id);
            }
            if ns.bmtb.is_some() {
                ns.record("bmtb_bmt_offsets", node.id);
            }
            ns.bmt = Some(blocks);
        }
    }
    Ok(())
}

/// BMT_PAD: pads every BMT to its scope's maximum size with explicit
/// zeros. A pad entry sits in the block's last row; its column repeats the
/// last real column of that row so gather addresses stay in bounds.
fn op_bmt_pad<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    let scope = require_scope(node)?;
    let bmt = ns.bmt.clone().ok_or_else(|| err(node, "BMT_PAD requires BMT blocks"))?;
    let n_bmt = bmt.count();

    // BMT index ranges per scope
    let scope_ranges: Vec<(usize, usize)> = match (scope, &ns.bmtb) {
        (PadScope::PerBmtb, Some(bmtb)) => {
            let offs = Namespace::derive_child_offsets(bmtb, &bmt);
            offs.windows(2).map(|w| (w[0] as usize, w[1] as usize)).collect()
        }
        _ => vec![(0, n_bmt)],
    };

    // padded width per scope
    let mut scope_width = Vec::with_capacity(scope_ranges.len());
    for &(a, b) in &scope_ranges {
        let w = (a..b)
            .map(|t| bmt.nz_offsets[t + 1] - bmt.nz_offsets[t])
            .max()
            .unwrap_or(0);
        scope_width.push(w);
    }
    if scope == PadScope::Global && ns.bmtb.is_some() {
        // widths reported per BMTB for uniform plan indexing
        let w = scope_width[0];
        let _ = w;
    }

    let width_of = |t: usize| -> i64 {
        for (i, &(a, b)) in scope_ranges.iter().enumerate() {
            if t >= a && t < b {
                return scope_width[i];
            }
        }
        unreachable!("BMT outside every scope")
    };

    let padded_total: i64 = (0..n_bmt).map(&width_of).sum();
    let mut rows = Vec::with_capacity(padded_total as usize);
    let mut cols = Vec::with_capacity(padded_total as usize);
    let mut values = Vec::with_capacity(padded_total as usize);
    let mut pads = Vec::with_capacity(padded_total as usize);
    let mut new_bmt_offsets = vec![0i64];
    for t in 0..n_bmt {
        let (s, e) = bmt.nz_range(t);
        for i in s as usize..e as usize {
            rows.push(ns.rows[i]);
            cols.push(ns.cols[i]);
            values.push(ns.values[i]);
            pads.push(ns.pads[i]);
        }
        let want = width_of(t);
        let have = e - s;
        if have > 0 {
            let last = e as usize - 1;
            for _ in have..want {
                rows.push(ns.rows[last]);
                cols.push(ns.cols[last]);
                values.push(T::zero());
                pads.push(true);
            }
        }
        new_bmt_offsets.push(*new_bmt_offsets.last().unwrap() + want.max(have));
    }

    // shift coarser-level nonzero offsets to the padded layout
    let remap_parent = |parent: &LevelBlocks| -> Vec<i64> {
        let child_offs = Namespace::derive_child_offsets(parent, &bmt);
        child_offs.iter().map(|&ci| new_bmt_offsets[ci as usize]).collect()
    };
    if let Some(bmtb) = &ns.bmtb {
        let nz = remap_parent(bmtb);
        ns.bmtb.as_mut().unwrap().nz_offsets = nz;
    }
    if let Some(bmw) = &ns.bmw {
        let nz = remap_parent(bmw);
        ns.bmw.as_mut().unwrap().nz_offsets = nz;
    }

    ns.rows = rows;
    ns.cols = cols;
    ns.values = values;
    ns.pads = pads;
    ns.bmt.as_mut().unwrap().nz_offsets = new_bmt_offsets;

    // widths reported per BMTB (single entry when no BMTB exists)
    let widths = match (&ns.bmtb, scope) {
        (Some(bmtb), PadScope::PerBmtb) => scope_width.clone(),
        (Some(bmtb), PadScope::Global) => vec![scope_width[0]; bmtb.count()],
        (None, _) => scope_width.clone(),
    };
    ns.pad = Some(PadInfo { scope, widths });
    ns.record("bmt_sizes_of_bmtb", node.id);
    ns.record("pad_flags", node.id);
    Ok(())
}

/// SORT_BMTB: rows of each BMTB stably sorted by descending length;
/// cross-block order is untouched, which keeps all block offsets valid.
fn op_sort_bmtb<T: Scalar>(ns: &mut Namespace<T>, node: &OperatorNode) -> Result<(), DesignError> {
    let bmtb = ns.bmtb.clone().ok_or_else(|| err(node, "SORT_BMTB requires BMTB blocks"))?;
    let row_offsets = bmtb
        .row_offsets
        .clone()
        .ok_or_else(|| err(node, "SORT_BMTB requires row-aligned BMTB blocks"))?;
    let mut order: Vec<usize> = (0..ns.n_local_rows).collect();
    for w in row_offsets.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        order[a..b].sort_by_key(|&r| -ns.row_lengths[r]);
    }
    permute_rows(ns, &order);
    // per-block nonzero counts are permutation invariant; recompute the
    // cumulative offsets anyway to keep them exact
    let starts = ns.row_starts();
    let nz: Vec<i64> = row_offsets.iter().map(|&r| starts[r as usize]).collect();
    ns.bmtb.as_mut().unwrap().nz_offsets = nz;
    ns.record("origin_rows", node.id);
    Ok(())
}

/// Distinct row runs inside an entry range (entries are row-major, so runs
/// equal distinct rows).
fn row_runs<T: Scalar>(ns: &Namespace<T>, s: i64, e: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for i in s as usize..e as usize {
        if out.last() != Some(&ns.rows[i]) {
            out.push(ns.rows[i]);
        }
    }
    out
}

/// Number of reduction partials each local row of a BMTB produces, given
/// the reductions below the block level.
pub(crate) fn partials_per_row_in_bmtb<T: Scalar>(
    ns: &Namespace<T>,
    choices: &ImplChoices,
    b: usize,
) -> Vec<(i64, i64)> {
    let bmtb = ns.bmtb.as_ref().expect("BMTB level required");
    let (s, e) = bmtb.nz_range(b);
    let unit_ranges: Vec<(i64, i64)> = if choices.warp_red.is_some() {
        sub_ranges(ns.bmw.as_ref().unwrap(), s, e)
    } else if choices.thread_red.is_some() {
        sub_ranges(ns.bmt.as_ref().unwrap(), s, e)
    } else {
        (s..e).map(|i| (i, i + 1)).collect()
    };
    let mut counts: Vec<(i64, i64)> = Vec::new();
    for (us, ue) in unit_ranges {
        for row in row_runs(ns, us, ue) {
            match counts.iter_mut().find(|(r, _)| *r == row) {
                Some((_, c)) => *c += 1,
                None => counts.push((row, 1)),
            }
        }
    }
    counts.sort_by_key(|&(r, _)| r);
    counts
}

fn sub_ranges(level: &LevelBlocks, s: i64, e: i64) -> Vec<(i64, i64)> {
    (0..level.count())
        .map(|i| level.nz_range(i))
        .filter(|&(a, b)| a >= s && b <= e)
        .collect()
}

/// Packs one bit per entry: set when the entry starts a new row run within
/// its enclosing block at `level`.
fn boundary_bitmap<T: Scalar>(ns: &Namespace<T>, level: &LevelBlocks) -> Vec<i64> {
    let n = ns.rows.len();
    let mut words = vec![0i64; n.div_ceil(32)];
    for b in 0..level.count() {
        let (s, e) = level.nz_range(b);
        for i in s as usize..e as usize {
            let boundary = i as i64 == s || ns.rows[i] != ns.rows[i - 1];
            if boundary {
                words[i / 32] |= 1 << (i % 32);
            }
        }
    }
    words
}

/// Implementing-stage operators: reduction choices and launch geometry are
/// recorded as scalars; bitmap and offset reductions also materialize the
/// arrays their kernels read.
fn record_impl_choice<T: Scalar>(
    ns: &mut Namespace<T>,
    node: &OperatorNode,
) -> Result<(), DesignError> {
    use OperatorKind::*;
    match node.kind {
        SetResources => {
            let t = require_int(node, "threads_per_block")?;
            if !(32..=1024).contains(&t) || t % 32 != 0 {
                return Err(err(node, "`threads_per_block` must be a multiple of 32 in 32..=1024"));
            }
            ns.impl_choices.threads_per_block = Some(t);
            ns.record("threads_per_block", node.id);
        }
        ThreadTotalRed => ns.impl_choices.thread_red = Some(ThreadRed::Total),
        ThreadBitmapRed => {
            let bmt = ns.bmt.clone().ok_or_else(|| err(node, "requires BMT blocks"))?;
            let words = boundary_bitmap(ns, &bmt);
            ns.set_extra("row_boundary_bitmap", MetaEntry::IntArray(words), node.id);
            ns.impl_choices.thread_red = Some(ThreadRed::Bitmap);
        }
        WarpTotalRed => ns.impl_choices.warp_red = Some(WarpRed::Total),
        WarpBitmapRed => {
            let bmw = ns.bmw.clone().ok_or_else(|| err(node, "requires BMW blocks"))?;
            if ns.impl_choices.thread_red.is_some() {
                return Err(err(node, "WARP_BITMAP_RED reduces raw products; a thread reduction is already present"));
            }
            let words = boundary_bitmap(ns, &bmw);
            ns.set_extra("warp_row_bitmap", MetaEntry::IntArray(words), node.id);
            ns.impl_choices.warp_red = Some(WarpRed::Bitmap);
        }
        WarpSegRed => ns.impl_choices.warp_red = Some(WarpRed::Seg),
        ShmemTotalRed => ns.impl_choices.block_red = Some(BlockRed::Total),
        ShmemOffsetRed => {
            let bmtb = ns.bmtb.clone().ok_or_else(|| err(node, "requires BMTB blocks"))?;
            let mut flat = Vec::new();
            let mut index_offsets = vec![0i64];
            let choices = ns.impl_choices.clone();
            for b in 0..bmtb.count() {
                let counts = partials_per_row_in_bmtb(ns, &choices, b);
                let mut offs = vec![0i64];
                for &(_, c) in &counts {
                    offs.push(offs.last().unwrap() + c);
                }
                index_offsets.push(index_offsets.last().unwrap() + offs.len() as i64);
                flat.extend(offs);
            }
            ns.set_extra("reduce_row_offsets", MetaEntry::IntArray(flat), node.id);
            ns.set_extra(
                "reduce_row_index_offsets",
                MetaEntry::IntArray(index_offsets),
                node.id,
            );
            ns.impl_choices.block_red = Some(BlockRed::Offset);
        }
        GmemAtomRed => ns.impl_choices.gmem_atomic = true,
        _ => unreachable!(),
    }
    Ok(())
}
