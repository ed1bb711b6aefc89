//! Count-based possibility tracking for hidden cards.
//!
//! Each slot's distribution conditions only on public information and the
//! partner's visible hand. Cards in the player's own other slots are never
//! used to eliminate identities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{copies_of_rank, Card, Color, GameState, NUM_COLORS, NUM_RANKS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("clue left an empty possibility set")]
    EmptyPossibilities,
    #[error("slot {slot} of player {player} is empty")]
    EmptySlot { player: usize, slot: usize },
    #[error("no identity consistent with the knowledge of player {player} slot {slot} remains unseen")]
    NoConsistentIdentity { player: usize, slot: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Clue {
    Color(Color),
    Rank(u8),
}

impl Clue {
    pub fn matches(self, card: Card) -> bool {
        match self {
            Clue::Color(c) => card.color == c,
            Clue::Rank(r) => card.rank == r,
        }
    }
}

/// What the holder of a card knows about it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CardKnowledge {
    #[serde(with = "color_set")]
    pub possible_colors: u8,
    #[serde(with = "rank_set")]
    pub possible_ranks: u8,
    pub positively_clued_color: bool,
    pub positively_clued_rank: bool,
}

const ALL_FIVE: u8 = 0b1_1111;

impl CardKnowledge {
    pub fn full() -> CardKnowledge {
        CardKnowledge {
            possible_colors: ALL_FIVE,
            possible_ranks: ALL_FIVE,
            positively_clued_color: false,
            positively_clued_rank: false,
        }
    }

    pub fn exactly(card: Card) -> CardKnowledge {
        CardKnowledge {
            possible_colors: 1 << card.color.index(),
            possible_ranks: 1 << (card.rank - 1),
            positively_clued_color: true,
            positively_clued_rank: true,
        }
    }

    pub fn with_sets(colors: &[Color], ranks: &[u8]) -> CardKnowledge {
        CardKnowledge {
            possible_colors: colors.iter().fold(0, |m, c| m | 1 << c.index()),
            possible_ranks: ranks.iter().fold(0, |m, r| m | 1 << (r - 1)),
            positively_clued_color: false,
            positively_clued_rank: false,
        }
    }

    pub fn color_possible(&self, color: Color) -> bool {
        self.possible_colors & (1 << color.index()) != 0
    }

    pub fn rank_possible(&self, rank: u8) -> bool {
        self.possible_ranks & (1 << (rank - 1)) != 0
    }

    pub fn admits(&self, card: Card) -> bool {
        self.color_possible(card.color) && self.rank_possible(card.rank)
    }

    pub fn colors(&self) -> impl Iterator<Item = Color> + '_ {
        Color::ALL.into_iter().filter(|&c| self.color_possible(c))
    }

    pub fn ranks(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=NUM_RANKS as u8).filter(|&r| self.rank_possible(r))
    }

    /// Number of (color, rank) identities still admitted.
    pub fn size(&self) -> u32 {
        self.possible_colors.count_ones() * self.possible_ranks.count_ones()
    }

    /// Positive information narrows to the clued value, negative information removes it.
    pub fn apply_clue(&self, clue: Clue, touched: bool) -> Result<CardKnowledge, BeliefError> {
        let mut next = *self;
        match (clue, touched) {
            (Clue::Color(c), true) => {
                next.possible_colors &= 1 << c.index();
                next.positively_clued_color = true;
            }
            (Clue::Color(c), false) => next.possible_colors &= !(1 << c.index()),
            (Clue::Rank(r), true) => {
                next.possible_ranks &= 1 << (r - 1);
                next.positively_clued_rank = true;
            }
            (Clue::Rank(r), false) => next.possible_ranks &= !(1 << (r - 1)),
        }
        if next.possible_colors == 0 || next.possible_ranks == 0 {
            return Err(BeliefError::EmptyPossibilities);
        }
        Ok(next)
    }
}

impl Default for CardKnowledge {
    fn default() -> Self {
        CardKnowledge::full()
    }
}

pub fn update_knowledge_on_clue(
    knowledge: &CardKnowledge,
    clue: Clue,
    touched: bool,
) -> Result<CardKnowledge, BeliefError> {
    knowledge.apply_clue(clue, touched)
}

mod color_set {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &u8, s: S) -> Result<S::Ok, S::Error> {
        let colors: Vec<Color> = Color::ALL.into_iter().filter(|c| mask & (1 << c.index()) != 0).collect();
        colors.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u8, D::Error> {
        let colors = Vec::<Color>::deserialize(d)?;
        if colors.is_empty() {
            return Err(D::Error::custom("empty color set"));
        }
        Ok(colors.iter().fold(0, |m, c| m | 1 << c.index()))
    }
}

mod rank_set {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &u8, s: S) -> Result<S::Ok, S::Error> {
        let ranks: Vec<u8> = (1..=5u8).filter(|r| mask & (1 << (r - 1)) != 0).collect();
        ranks.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u8, D::Error> {
        let ranks = Vec::<u8>::deserialize(d)?;
        if ranks.is_empty() || ranks.iter().any(|r| !(1..=5).contains(r)) {
            return Err(D::Error::custom("rank set must be a non-empty subset of 1..=5"));
        }
        Ok(ranks.iter().fold(0, |m, r| m | 1 << (r - 1)))
    }
}

/// Unseen-copy counts for every identity a slot could hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityDistribution {
    pub weights: [u8; NUM_COLORS * NUM_RANKS],
    pub total: u32,
}

impl IdentityDistribution {
    pub fn weight(&self, card: Card) -> u8 {
        self.weights[card.identity_index()]
    }

    pub fn support(&self) -> impl Iterator<Item = (Card, u8)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(i, &w)| (Card::from_identity_index(i), w))
    }

    /// Probability mass of identities satisfying `pred`.
    pub fn probability(&self, mut pred: impl FnMut(Card) -> bool) -> f64 {
        let hits: u32 = self.support().filter(|&(c, _)| pred(c)).map(|(_, w)| w as u32).sum();
        hits as f64 / self.total as f64
    }
}

/// Copies of each identity `player` can see: partner's hand, discards, fireworks.
fn visible_counts(state: &GameState, player: usize) -> [u8; NUM_COLORS * NUM_RANKS] {
    let mut seen = [0u8; NUM_COLORS * NUM_RANKS];
    let partner = GameState::partner(player);
    let partner_cards = state.hands[partner].iter().flatten().map(|s| s.card);
    for card in state.discards.iter().copied().chain(partner_cards) {
        seen[card.identity_index()] += 1;
    }
    for color in Color::ALL {
        for rank in 1..=state.fireworks[color.index()] {
            seen[Card::new(color, rank).identity_index()] += 1;
        }
    }
    seen
}

pub fn identity_distribution(
    state: &GameState,
    player: usize,
    slot: usize,
) -> Result<IdentityDistribution, BeliefError> {
    let knowledge = state
        .slot(player, slot)
        .ok_or(BeliefError::EmptySlot { player, slot })?
        .knowledge;
    let seen = visible_counts(state, player);
    let mut weights = [0u8; NUM_COLORS * NUM_RANKS];
    let mut total = 0u32;
    for color in knowledge.colors() {
        for rank in knowledge.ranks() {
            let card = Card::new(color, rank);
            let w = copies_of_rank(rank).saturating_sub(seen[card.identity_index()]);
            weights[card.identity_index()] = w;
            total += w as u32;
        }
    }
    if total == 0 {
        return Err(BeliefError::NoConsistentIdentity { player, slot });
    }
    Ok(IdentityDistribution { weights, total })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardEventProbabilities {
    pub p_playable: f64,
    pub p_unplayable: f64,
    pub p_endangered: f64,
    pub p_unneeded: f64,
}

pub fn card_event_probabilities(
    state: &GameState,
    player: usize,
    slot: usize,
) -> Result<CardEventProbabilities, BeliefError> {
    let dist = identity_distribution(state, player, slot)?;
    let mut playable = 0u32;
    let mut endangered = 0u32;
    let mut unneeded = 0u32;
    for (card, w) in dist.support() {
        let w = w as u32;
        if state.is_playable(card) {
            playable += w;
        }
        if state.is_endangered(card) {
            endangered += w;
        }
        if state.is_unneeded(card) {
            unneeded += w;
        }
    }
    let total = dist.total as f64;
    Ok(CardEventProbabilities {
        p_playable: playable as f64 / total,
        p_unplayable: (dist.total - playable) as f64 / total,
        p_endangered: endangered as f64 / total,
        p_unneeded: unneeded as f64 / total,
    })
}
