#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkerState {
    /// The opposite branch still holds relevant paths.
    Set,
    /// Replay is forced down the opposite branch.
    Negated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Marker {
    pub index: usize,
    pub state: MarkerState,
}

/// Markers in path order; indices strictly increase along the sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkerStore {
    markers: Vec<Marker>,
}

impl MarkerStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Marker> {
        self.markers.iter()
    }

    pub fn get(&self, position: usize) -> Option<Marker> {
        self.markers.get(position).copied()
    }

    pub fn last(&self) -> Option<Marker> {
        self.markers.last().copied()
    }

    /// Appends a `Set` marker. Returns `false` (and leaves the store alone)
    /// if `index` does not extend the sequence.
    pub fn push_set(&mut self, index: usize) -> bool {
        if self.markers.last().is_some_and(|m| m.index >= index) {
            return false;
        }
        self.markers.push(Marker {
            index,
            state: MarkerState::Set,
        });
        true
    }

    pub fn lookup(&self, index: usize) -> Option<MarkerState> {
        self.markers
            .binary_search_by_key(&index, |m| m.index)
            .ok()
            .map(|i| self.markers[i].state)
    }

    /// Drops the deepest run of negated markers: both subtrees below them
    /// have been traced.
    pub fn pop_trailing_negated(&mut self) {
        while self.markers.last().is_some_and(|m| m.state == MarkerState::Negated) {
            self.markers.pop();
        }
    }

    /// Negates the deepest marker, returning its condition index.
    pub fn negate_last(&mut self) -> Option<usize> {
        let last = self.markers.last_mut()?;
        last.state = MarkerState::Negated;
        Some(last.index)
    }
}
