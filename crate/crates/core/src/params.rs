//! Flat parameter storage addressed by module group.
//!
//! Every model is one contiguous `f64` vector split into four groups in a
//! fixed order: semantic encoder, channel encoder, channel decoder, semantic
//! decoder. Aggregation, partial synchronisation and byte accounting all
//! operate on group ranges of that vector.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default wire width of one parameter (32-bit values).
pub const DEFAULT_BYTES_PER_ELEMENT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    SemanticEnc,
    ChannelEnc,
    ChannelDec,
    SemanticDec,
}

impl Group {
    pub const ALL: [Group; 4] = [
        Group::SemanticEnc,
        Group::ChannelEnc,
        Group::ChannelDec,
        Group::SemanticDec,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::SemanticEnc => "semantic_enc",
            Group::ChannelEnc => "channel_enc",
            Group::ChannelDec => "channel_dec",
            Group::SemanticDec => "semantic_dec",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGroup(s.to_string()))
    }
}

/// Subset of the four groups, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GroupSet(u8);

impl GroupSet {
    pub const EMPTY: GroupSet = GroupSet(0);
    pub const ALL: GroupSet = GroupSet(0b1111);
    /// Semantic encoder and decoder only: the partial-update payload.
    pub const SEMANTIC: GroupSet = GroupSet(0b1001);
    pub const CHANNEL: GroupSet = GroupSet(0b0110);

    pub fn contains(self, group: Group) -> bool {
        self.0 & (1 << group.index()) != 0
    }

    pub fn insert(&mut self, group: Group) {
        self.0 |= 1 << group.index();
    }

    pub fn union(self, other: GroupSet) -> GroupSet {
        GroupSet(self.0 | other.0)
    }

    pub fn intersection(self, other: GroupSet) -> GroupSet {
        GroupSet(self.0 & other.0)
    }

    pub fn complement(self) -> GroupSet {
        GroupSet(!self.0 & 0b1111)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Group> {
        Group::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Parses a comma separated list of group names.
    pub fn parse_list(s: &str) -> Result<GroupSet> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Group::from_str)
            .collect()
    }
}

impl FromIterator<Group> for GroupSet {
    fn from_iter<I: IntoIterator<Item = Group>>(iter: I) -> Self {
        let mut set = GroupSet::EMPTY;
        for g in iter {
            set.insert(g);
        }
        set
    }
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRange {
    pub group: Group,
    pub offset: usize,
    pub length: usize,
    pub bytes_per_element: u32,
}

impl GroupRange {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.length
    }

    pub fn bytes(&self) -> u64 {
        self.length as u64 * u64::from(self.bytes_per_element)
    }
}

/// Contiguous placement of the four groups inside a parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    groups: [GroupRange; 4],
}

impl GroupLayout {
    /// Builds a layout from per-group element counts in canonical order.
    pub fn from_lengths(lengths: [usize; 4], bytes_per_element: u32) -> Self {
        let mut offset = 0;
        let groups = std::array::from_fn(|i| {
            let range = GroupRange {
                group: Group::ALL[i],
                offset,
                length: lengths[i],
                bytes_per_element,
            };
            offset += lengths[i];
            range
        });
        GroupLayout { groups }
    }

    /// Module sizes of the reference Swin-based system: 55.12 MB semantic
    /// encoder, 53.41 MB semantic decoder and 25.07 MB for each half of the
    /// channel codec, at 4 bytes per element (1 MB = 10^6 bytes).
    pub fn paper_sizes() -> Self {
        Self::from_lengths([13_780_000, 6_267_500, 6_267_500, 13_352_500], 4)
    }

    pub fn total_len(&self) -> usize {
        self.groups.iter().map(|g| g.length).sum()
    }

    pub fn group(&self, group: Group) -> &GroupRange {
        &self.groups[group.index()]
    }

    pub fn groups(&self) -> &[GroupRange; 4] {
        &self.groups
    }

    pub fn with_bytes_per_element(&self, bytes_per_element: u32) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            g.bytes_per_element = bytes_per_element;
        }
        out
    }

    /// Bytes needed to transmit the listed groups.
    pub fn byte_size(&self, groups: GroupSet) -> u64 {
        groups.iter().map(|g| self.group(g).bytes()).sum()
    }
}

/// Immutable flat parameter vector tied to a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<GroupLayout>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, layout: Arc<GroupLayout>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::LengthMismatch {
                expected: layout.total_len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<GroupLayout>) -> Self {
        ParamVector {
            values: vec![0.0; layout.total_len()],
            layout,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<GroupLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn group_values(&self, group: Group) -> &[f64] {
        &self.values[self.layout.group(group).range()]
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    fn check_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch)
        }
    }

    /// Returns a copy where the listed groups are taken from `src`.
    pub fn overwrite_groups(&self, src: &ParamVector, groups: GroupSet) -> Result<ParamVector> {
        self.check_layout(src)?;
        let mut values = self.values.clone();
        for g in groups.iter() {
            let r = self.layout.group(g).range();
            values[r.clone()].copy_from_slice(&src.values[r]);
        }
        Ok(ParamVector {
            values,
            layout: self.layout.clone(),
        })
    }

    /// `self - lr * gradient`.
    pub fn sgd_step(&self, gradient: &ParamVector, lr: f64) -> Result<ParamVector> {
        self.check_layout(gradient)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&gradient.values)
            .map(|(p, g)| p - lr * g)
            .collect();
        ParamVector::new(values, self.layout.clone())
    }
}

/// `Σ_k weights[k] · vectors[k]`, elementwise.
pub fn weighted_sum(vectors: &[&ParamVector], weights: &[f64]) -> Result<ParamVector> {
    if vectors.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: vectors.len(),
            actual: weights.len(),
        });
    }
    let first = vectors.first().ok_or(Error::LengthMismatch {
        expected: 1,
        actual: 0,
    })?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("aggregation weights"));
    }
    for v in &vectors[1..] {
        first.check_layout(v)?;
    }
    let mut out = vec![0.0; first.len()];
    for (v, &w) in vectors.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(&v.values) {
            *o += w * x;
        }
    }
    ParamVector::new(out, first.layout.clone())
}

/// Byte size of a group set under `layout`.
pub fn byte_size(layout: &GroupLayout, groups: GroupSet) -> u64 {
    layout.byte_size(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_layout() -> Arc<GroupLayout> {
        Arc::new(GroupLayout::from_lengths([1, 1, 1, 1], 4))
    }

    fn pv(values: &[f64], layout: &Arc<GroupLayout>) -> ParamVector {
        ParamVector::new(values.to_vec(), layout.clone()).unwrap()
    }

    #[test]
    fn layout_is_contiguous() {
        let layout = GroupLayout::from_lengths([3, 0, 5, 2], 4);
        let mut next = 0;
        for g in layout.groups() {
            assert_eq!(g.offset, next);
            next += g.length;
        }
        assert_eq!(next, layout.total_len());
        assert_eq!(layout.byte_size(GroupSet::ALL), 40);
    }

    #[test]
    fn weighted_sum_examples() {
        let layout = Arc::new(GroupLayout::from_lengths([1, 0, 0, 1], 4));
        let a = pv(&[1.0, 1.0], &layout);
        let b = pv(&[3.0, 3.0], &layout);
        let out = weighted_sum(&[&a, &b], &[0.25, 0.75]).unwrap();
        assert_eq!(out.values(), &[2.5, 2.5]);

        let same = weighted_sum(&[&a, &a], &[0.5, 0.5]).unwrap();
        assert_eq!(same.values(), a.values());
        assert_eq!(weighted_sum(&[&b], &[1.0]).unwrap(), b);
    }

    #[test]
    fn weighted_sum_errors() {
        let l1 = unit_layout();
        let l2 = Arc::new(GroupLayout::from_lengths([2, 1, 1, 0], 4));
        let a = pv(&[1.0; 4], &l1);
        let b = pv(&[1.0; 4], &l2);
        assert!(matches!(
            weighted_sum(&[&a, &b], &[0.5, 0.5]),
            Err(Error::LayoutMismatch)
        ));
        assert!(matches!(
            weighted_sum(&[&a, &a], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(weighted_sum(&[&a], &[f64::NAN]).is_err());
    }

    #[test]
    fn overwrite_examples() {
        let layout = unit_layout();
        let dst = pv(&[0.0; 4], &layout);
        let src = pv(&[1.0, 2.0, 3.0, 4.0], &layout);
        let out = dst.overwrite_groups(&src, GroupSet::SEMANTIC).unwrap();
        assert_eq!(out.values(), &[1.0, 0.0, 0.0, 4.0]);
        assert_eq!(dst.overwrite_groups(&src, GroupSet::ALL).unwrap(), src);
        assert_eq!(dst.overwrite_groups(&src, GroupSet::EMPTY).unwrap(), dst);
    }

    #[test]
    fn unknown_group_name_is_rejected() {
        assert!(matches!(
            GroupSet::parse_list("semantic_enc,bogus"),
            Err(Error::UnknownGroup(_))
        ));
        assert_eq!(
            GroupSet::parse_list("semantic_enc, semantic_dec").unwrap(),
            GroupSet::SEMANTIC
        );
    }

    #[test]
    fn paper_sizes_in_bytes() {
        let layout = GroupLayout::paper_sizes();
        assert_eq!(layout.byte_size(GroupSet::ALL), 158_670_000);
        assert_eq!(layout.byte_size(GroupSet::SEMANTIC), 108_530_000);
        assert_eq!(layout.byte_size(GroupSet::EMPTY), 0);
        assert_eq!(layout.byte_size(GroupSet::CHANNEL), 50_140_000);
    }

    #[test]
    fn sgd_step_arithmetic() {
        let layout = Arc::new(GroupLayout::from_lengths([1, 0, 0, 1], 4));
        let p = pv(&[1.0, 1.0], &layout);
        let g = pv(&[10.0, -10.0], &layout);
        let out = p.sgd_step(&g, 1e-1).unwrap();
        assert!((out.values()[0] - 0.0).abs() < 1e-15);
        assert!((out.values()[1] - 2.0).abs() < 1e-15);
        let zero = ParamVector::zeros(layout);
        assert_eq!(p.sgd_step(&zero, 0.5).unwrap(), p);
    }

    #[test]
    fn non_finite_values_rejected() {
        let layout = unit_layout();
        assert!(ParamVector::new(vec![0.0, f64::INFINITY, 0.0, 0.0], layout).is_err());
    }
}
