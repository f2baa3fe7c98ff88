//! Events, causal orders and the classification of detection records.
//!
//! A causal order over `n` events is stored as a full `n x n` table of
//! [`Relation`]s. The table is canonical (the diagonal always holds
//! `Simultaneous`), so structurally equal orders compare and hash equal and
//! can key a map.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Index of an event within a finite event set.
pub type EventId = usize;

/// Largest event count accepted by [`enumerate_reachable_orders`].
pub const MAX_ENUMERATED_EVENTS: usize = 6;

/// Pairwise relation between two events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Precedes,
    Follows,
    Simultaneous,
    Incomparable,
}

impl Relation {
    pub fn inverse(self) -> Self {
        match self {
            Relation::Precedes => Relation::Follows,
            Relation::Follows => Relation::Precedes,
            r => r,
        }
    }

    fn symbol(self) -> char {
        match self {
            Relation::Precedes => '<',
            Relation::Follows => '>',
            Relation::Simultaneous => '~',
            Relation::Incomparable => '|',
        }
    }
}

/// Relation table over `n` events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CausalOrder {
    n: usize,
    rel: Vec<Relation>,
}

impl CausalOrder {
    /// All off-diagonal pairs incomparable.
    pub fn incomparable(n: usize) -> Self {
        let mut rel = vec![Relation::Incomparable; n * n];
        for i in 0..n {
            rel[i * n + i] = Relation::Simultaneous;
        }
        Self { n, rel }
    }

    /// Builds an order from a raw row-major table. Only the shape is checked;
    /// use [`validate_order`] for the axioms. The diagonal is canonicalised.
    pub fn from_table(n: usize, mut rel: Vec<Relation>) -> Result<Self> {
        if rel.len() != n * n {
            return Err(Error::param(
                "rel",
                format!("expected {} entries, got {}", n * n, rel.len()),
            ));
        }
        for i in 0..n {
            rel[i * n + i] = Relation::Simultaneous;
        }
        Ok(Self { n, rel })
    }

    /// Sets `a r b` together with the inverse entry `b r^-1 a`.
    pub fn set(&mut self, a: EventId, b: EventId, r: Relation) {
        assert!(a != b, "diagonal entries are fixed");
        self.rel[a * self.n + b] = r;
        self.rel[b * self.n + a] = r.inverse();
    }

    /// Sets a single table entry without touching its mirror.
    pub fn set_one_sided(&mut self, a: EventId, b: EventId, r: Relation) {
        assert!(a != b, "diagonal entries are fixed");
        self.rel[a * self.n + b] = r;
    }

    pub fn get(&self, a: EventId, b: EventId) -> Relation {
        self.rel[a * self.n + b]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Applies the relabelling `event i -> perm[i]`.
    pub fn relabel(&self, perm: &[EventId]) -> Self {
        let n = self.n;
        let mut rel = vec![Relation::Simultaneous; n * n];
        for a in 0..n {
            for b in 0..n {
                rel[perm[a] * n + perm[b]] = self.rel[a * n + b];
            }
        }
        Self { n, rel }
    }

    /// True when no pair is incomparable.
    pub fn is_time_order(&self) -> bool {
        !self.rel.contains(&Relation::Incomparable)
    }
}

impl fmt::Display for CausalOrder {
    /// Lists every pair `a < b` once, e.g. `0<1;0|2;1|2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in 0..self.n {
            for b in a + 1..self.n {
                if !first {
                    f.write_str(";")?;
                }
                first = false;
                write!(f, "{a}{}{b}", self.get(a, b).symbol())?;
            }
        }
        Ok(())
    }
}

/// The four causal orders of a two-event set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairOrder {
    /// Event 0 precedes event 1.
    M1,
    /// Event 1 precedes event 0.
    M2,
    /// The events are incomparable (neither happened).
    M3,
    /// The events are simultaneous.
    M4,
}

impl PairOrder {
    pub const ALL: [PairOrder; 4] = [PairOrder::M1, PairOrder::M2, PairOrder::M3, PairOrder::M4];

    pub fn order(self) -> CausalOrder {
        let mut o = CausalOrder::incomparable(2);
        match self {
            PairOrder::M1 => o.set(0, 1, Relation::Precedes),
            PairOrder::M2 => o.set(0, 1, Relation::Follows),
            PairOrder::M3 => o.set(0, 1, Relation::Incomparable),
            PairOrder::M4 => o.set(0, 1, Relation::Simultaneous),
        }
        o
    }

    pub fn of(order: &CausalOrder) -> Option<Self> {
        if order.len() != 2 {
            return None;
        }
        Some(match order.get(0, 1) {
            Relation::Precedes => PairOrder::M1,
            Relation::Follows => PairOrder::M2,
            Relation::Incomparable => PairOrder::M3,
            Relation::Simultaneous => PairOrder::M4,
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            PairOrder::M1 => "M1",
            PairOrder::M2 => "M2",
            PairOrder::M3 => "M3",
            PairOrder::M4 => "M4",
        }
    }
}

/// Detection record of one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Time(f64),
    NoDetection,
}

impl Outcome {
    pub fn time(self) -> Option<f64> {
        match self {
            Outcome::Time(t) => Some(t),
            Outcome::NoDetection => None,
        }
    }

    pub fn is_detected(self) -> bool {
        matches!(self, Outcome::Time(_))
    }
}

/// Joint detection record of all events.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeVector(Vec<Outcome>);

impl OutcomeVector {
    /// Checks that every detection time is finite and non-negative.
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        for o in &outcomes {
            if let Outcome::Time(t) = o {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(Error::param(
                        "outcome",
                        format!("detection time must be finite and >= 0, got {t}"),
                    ));
                }
            }
        }
        Ok(Self(outcomes))
    }

    /// Two-event record from optional times.
    pub fn pair(t1: Option<f64>, t2: Option<f64>) -> Result<Self> {
        let f = |t: Option<f64>| t.map_or(Outcome::NoDetection, Outcome::Time);
        Self::new(vec![f(t1), f(t2)])
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks irreflexivity, asymmetry, transitivity, the symmetry of `~` and `|`,
/// and that simultaneity is an equivalence on the events it links.
pub fn validate_order(order: &CausalOrder) -> bool {
    let n = order.len();
    for a in 0..n {
        if order.get(a, a) == Relation::Precedes || order.get(a, a) == Relation::Follows {
            return false;
        }
        for b in 0..n {
            if a == b {
                continue;
            }
            let ab = order.get(a, b);
            let ba = order.get(b, a);
            if ab.inverse() != ba {
                return false;
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let ab = order.get(a, b);
                let bc = order.get(b, c);
                let ac = order.get(a, c);
                if ab == Relation::Precedes && bc == Relation::Precedes && ac != Relation::Precedes
                {
                    return false;
                }
                if ab == Relation::Simultaneous
                    && bc == Relation::Simultaneous
                    && ac != Relation::Simultaneous
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Maps a detection record to its causal order.
///
/// Detected events are ordered by time, with exactly equal times simultaneous.
/// Every detected event precedes every undetected one, and undetected events
/// are mutually incomparable.
pub fn classify_outcomes(v: &OutcomeVector) -> CausalOrder {
    classify_slice(v.outcomes())
}

pub(crate) fn classify_slice(v: &[Outcome]) -> CausalOrder {
    let n = v.len();
    let mut order = CausalOrder::incomparable(n);
    for a in 0..n {
        for b in a + 1..n {
            let r = match (v[a], v[b]) {
                (Outcome::Time(ta), Outcome::Time(tb)) => {
                    if ta < tb {
                        Relation::Precedes
                    } else if ta > tb {
                        Relation::Follows
                    } else {
                        Relation::Simultaneous
                    }
                }
                (Outcome::Time(_), Outcome::NoDetection) => Relation::Precedes,
                (Outcome::NoDetection, Outcome::Time(_)) => Relation::Follows,
                (Outcome::NoDetection, Outcome::NoDetection) => Relation::Incomparable,
            };
            order.set(a, b, r);
        }
    }
    order
}

/// All causal orders that [`classify_outcomes`] can produce for `n` events.
///
/// Built constructively: for every detected subset, every ordered partition
/// of it into simultaneity blocks, followed by the undetected tail.
pub fn enumerate_reachable_orders(n: usize) -> Result<BTreeSet<CausalOrder>> {
    if n == 0 || n > MAX_ENUMERATED_EVENTS {
        return Err(Error::SizeLimit {
            what: "event count",
            value: n,
            max: MAX_ENUMERATED_EVENTS,
        });
    }
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let detected: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let undetected: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut blocks = Vec::new();
        ordered_partitions(&detected, &mut blocks, &mut |blocks| {
            let mut o = CausalOrder::incomparable(n);
            for (bi, block) in blocks.iter().enumerate() {
                for (pos, &a) in block.iter().enumerate() {
                    for &b in &block[pos + 1..] {
                        o.set(a, b, Relation::Simultaneous);
                    }
                    for later in &blocks[bi + 1..] {
                        for &b in later {
                            o.set(a, b, Relation::Precedes);
                        }
                    }
                    for &b in &undetected {
                        o.set(a, b, Relation::Precedes);
                    }
                }
            }
            out.insert(o);
        });
    }
    Ok(out)
}

fn ordered_partitions(
    rest: &[usize],
    blocks: &mut Vec<Vec<usize>>,
    visit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if rest.is_empty() {
        visit(blocks);
        return;
    }
    let k = rest.len();
    for mask in 1u32..(1 << k) {
        let block: Vec<usize> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| rest[i])
            .collect();
        let remaining: Vec<usize> = (0..k)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| rest[i])
            .collect();
        blocks.push(block);
        ordered_partitions(&remaining, blocks, visit);
        blocks.pop();
    }
}

/// Probability of one causal order, with an optional error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub p: f64,
    /// Standard error (Monte Carlo) or numerical error estimate.
    pub stderr: Option<f64>,
}

/// Probability distribution over causal orders of a fixed event set.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderDistribution {
    n_events: usize,
    entries: BTreeMap<CausalOrder, Probability>,
    samples: Option<u64>,
}

/// Tolerance on the total mass accepted by [`OrderDistribution::from_probabilities`].
pub const MASS_TOLERANCE: f64 = 1e-9;

impl OrderDistribution {
    /// Builds a distribution from exact (analytic) probabilities.
    pub fn from_probabilities<I>(n_events: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CausalOrder, f64)>,
    {
        let mut map = BTreeMap::new();
        for (order, p) in entries {
            if order.len() != n_events {
                return Err(Error::param("order", "event count mismatch"));
            }
            if !(0.0..=1.0 + MASS_TOLERANCE).contains(&p) {
                return Err(Error::param("probability", format!("{p} not in [0, 1]")));
            }
            map.insert(order, Probability { p, stderr: None });
        }
        let total: f64 = map.values().map(|x| x.p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Numerical(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            n_events,
            entries: map,
            samples: None,
        })
    }

    /// Two-event distribution from `[p(M1), p(M2), p(M3), p(M4)]`.
    pub fn from_pair(p: [f64; 4]) -> Result<Self> {
        Self::from_probabilities(2, PairOrder::ALL.iter().zip(p).map(|(m, p)| (m.order(), p)))
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    pub fn probability(&self, order: &CausalOrder) -> f64 {
        self.entries.get(order).map_or(0.0, |x| x.p)
    }

    pub fn entry(&self, order: &CausalOrder) -> Option<Probability> {
        self.entries.get(order).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CausalOrder, &Probability)> {
        self.entries.iter()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().map(|x| x.p).sum()
    }

    /// `[p(M1), p(M2), p(M3), p(M4)]` for a two-event distribution.
    pub fn pair(&self) -> [f64; 4] {
        assert_eq!(self.n_events, 2, "pair() needs a two-event distribution");
        PairOrder::ALL.map(|m| self.probability(&m.order()))
    }

    /// Standard errors matching [`Self::pair`]; zero where none is recorded.
    pub fn pair_stderr(&self) -> [f64; 4] {
        assert_eq!(
            self.n_events, 2,
            "pair_stderr() needs a two-event distribution"
        );
        PairOrder::ALL.map(|m| self.entry(&m.order()).and_then(|e| e.stderr).unwrap_or(0.0))
    }

    pub fn get_pair(&self, m: PairOrder) -> f64 {
        self.probability(&m.order())
    }
}

/// Histogram of classified causal orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderCounts {
    n_events: usize,
    counts: BTreeMap<CausalOrder, u64>,
    total: u64,
}

impl OrderCounts {
    pub fn new(n_events: usize) -> Self {
        Self {
            n_events,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn add_order(&mut self, order: CausalOrder) {
        debug_assert_eq!(order.len(), self.n_events);
        *self.counts.entry(order).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn add(&mut self, v: &OutcomeVector) {
        self.add_order(classify_outcomes(v));
    }

    pub(crate) fn add_slice(&mut self, v: &[Outcome]) {
        self.add_order(classify_slice(v));
    }

    pub fn merge(&mut self, other: OrderCounts) {
        assert_eq!(self.n_events, other.n_events);
        for (o, c) in other.counts {
            *self.counts.entry(o).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, order: &CausalOrder) -> u64 {
        self.counts.get(order).copied().unwrap_or(0)
    }

    /// Empirical frequencies with binomial standard errors `sqrt(p(1-p)/N)`.
    pub fn into_distribution(self) -> Result<OrderDistribution> {
        if self.total == 0 {
            return Err(Error::Empty("no samples to aggregate"));
        }
        let n = self.total as f64;
        let entries = self
            .counts
            .into_iter()
            .map(|(o, c)| {
                let p = c as f64 / n;
                let se = (p * (1.0 - p) / n).sqrt();
                (
                    o,
                    Probability {
                        p,
                        stderr: Some(se),
                    },
                )
            })
            .collect();
        Ok(OrderDistribution {
            n_events: self.n_events,
            entries,
            samples: Some(self.total),
        })
    }
}

/// Empirical distribution of causal orders over a sample of detection records.
pub fn aggregate(samples: &[OutcomeVector]) -> Result<OrderDistribution> {
    let first = samples
        .first()
        .ok_or(Error::Empty("no samples to aggregate"))?;
    let mut counts = OrderCounts::new(first.len());
    for v in samples {
        if v.len() != first.len() {
            return Err(Error::param("samples", "inconsistent event counts"));
        }
        counts.add(v);
    }
    counts.into_distribution()
}
