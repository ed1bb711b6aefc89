//! Two-player Hanabi rules engine.
//!
//! [`GameState`] is a plain value: every transition takes `&self` and returns a
//! new state, so games can be simulated in parallel without coordination.
//!
//! Actions use a canonical 20-entry index space:
//!
//! | index   | action                 |
//! |---------|------------------------|
//! | 0..=4   | play slot 0..=4        |
//! | 5..=9   | discard slot 0..=4     |
//! | 10..=14 | clue color C0..=C4     |
//! | 15..=19 | clue rank 1..=5        |

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{CardKnowledge, Clue};

pub const NUM_COLORS: usize = 5;
pub const NUM_RANKS: usize = 5;
pub const HAND_SIZE: usize = 5;
pub const NUM_ACTIONS: usize = 20;
pub const NUM_PLAYERS: usize = 2;
pub const MAX_INFO_TOKENS: u8 = 8;
pub const MAX_STRIKES: u8 = 3;
pub const DECK_SIZE: usize = 50;
pub const MAX_SCORE: u8 = 25;

/// Copies of each rank (index 0 is rank 1) per color.
pub const COPIES_PER_RANK: [u8; NUM_RANKS] = [3, 2, 2, 2, 1];

pub fn copies_of_rank(rank: u8) -> u8 {
    COPIES_PER_RANK[(rank - 1) as usize]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Yellow,
    Green,
    Blue,
    White,
}

impl Color {
    pub const ALL: [Color; NUM_COLORS] = [
        Color::Red,
        Color::Yellow,
        Color::Green,
        Color::Blue,
        Color::White,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Color> {
        Color::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::White => "white",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawCard")]
pub struct Card {
    pub color: Color,
    pub rank: u8,
}

#[derive(Deserialize)]
struct RawCard {
    color: Color,
    rank: u8,
}

impl TryFrom<RawCard> for Card {
    type Error = String;

    fn try_from(raw: RawCard) -> Result<Self, Self::Error> {
        Card::try_new(raw.color, raw.rank).ok_or_else(|| format!("card rank {} out of range 1..=5", raw.rank))
    }
}

impl Card {
    /// Panics if `rank` is outside 1..=5.
    pub fn new(color: Color, rank: u8) -> Card {
        Card::try_new(color, rank).expect("card rank must be in 1..=5")
    }

    pub fn try_new(color: Color, rank: u8) -> Option<Card> {
        (1..=5).contains(&rank).then_some(Card { color, rank })
    }

    /// Dense index in 0..25, color-major.
    pub fn identity_index(self) -> usize {
        self.color.index() * NUM_RANKS + (self.rank as usize - 1)
    }

    pub fn from_identity_index(index: usize) -> Card {
        Card::new(Color::ALL[index / NUM_RANKS], (index % NUM_RANKS) as u8 + 1)
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.color, self.rank)
    }
}

/// The 50-card starting deck in canonical (unshuffled) order.
pub fn full_deck() -> Vec<Card> {
    let mut deck = Vec::with_capacity(DECK_SIZE);
    for color in Color::ALL {
        for rank in 1..=NUM_RANKS as u8 {
            for _ in 0..copies_of_rank(rank) {
                deck.push(Card::new(color, rank));
            }
        }
    }
    deck
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Play(usize),
    Discard(usize),
    ClueColor(Color),
    ClueRank(u8),
}

impl ActionKind {
    pub fn is_clue(self) -> bool {
        matches!(self, ActionKind::ClueColor(_) | ActionKind::ClueRank(_))
    }
}

/// An action identified by its canonical index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Action(u8);

impl TryFrom<usize> for Action {
    type Error = String;

    fn try_from(index: usize) -> Result<Self, Self::Error> {
        Action::from_index(index).ok_or_else(|| format!("action index {index} out of range 0..20"))
    }
}

impl From<Action> for usize {
    fn from(action: Action) -> usize {
        action.index()
    }
}

impl Action {
    pub fn from_index(index: usize) -> Option<Action> {
        (index < NUM_ACTIONS).then_some(Action(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..NUM_ACTIONS as u8).map(Action)
    }

    pub fn play(slot: usize) -> Action {
        assert!(slot < HAND_SIZE);
        Action(slot as u8)
    }

    pub fn discard(slot: usize) -> Action {
        assert!(slot < HAND_SIZE);
        Action((HAND_SIZE + slot) as u8)
    }

    pub fn clue_color(color: Color) -> Action {
        Action((10 + color.index()) as u8)
    }

    pub fn clue_rank(rank: u8) -> Action {
        assert!((1..=5).contains(&rank));
        Action(14 + rank)
    }

    pub fn from_kind(kind: ActionKind) -> Action {
        match kind {
            ActionKind::Play(slot) => Action::play(slot),
            ActionKind::Discard(slot) => Action::discard(slot),
            ActionKind::ClueColor(color) => Action::clue_color(color),
            ActionKind::ClueRank(rank) => Action::clue_rank(rank),
        }
    }

    pub fn kind(self) -> ActionKind {
        let i = self.index();
        match i {
            0..=4 => ActionKind::Play(i),
            5..=9 => ActionKind::Discard(i - 5),
            10..=14 => ActionKind::ClueColor(Color::ALL[i - 10]),
            _ => ActionKind::ClueRank((i - 14) as u8),
        }
    }

    pub fn clue(self) -> Option<Clue> {
        match self.kind() {
            ActionKind::ClueColor(c) => Some(Clue::Color(c)),
            ActionKind::ClueRank(r) => Some(Clue::Rank(r)),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ActionKind::Play(s) => write!(f, "play slot {s}"),
            ActionKind::Discard(s) => write!(f, "discard slot {s}"),
            ActionKind::ClueColor(c) => write!(f, "clue {c}"),
            ActionKind::ClueRank(r) => write!(f, "clue rank {r}"),
        }
    }
}

/// One boolean per canonical action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LegalMask(pub [bool; NUM_ACTIONS]);

impl LegalMask {
    pub fn none() -> LegalMask {
        LegalMask([false; NUM_ACTIONS])
    }

    pub fn all() -> LegalMask {
        LegalMask([true; NUM_ACTIONS])
    }

    pub fn is_legal(&self, index: usize) -> bool {
        self.0.get(index).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_ACTIONS).filter(move |&i| self.0[i])
    }

    pub fn first(&self) -> Option<usize> {
        self.indices().next()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub seed: u64,
    /// Third strike scores zero when set; otherwise the stacks count.
    pub strikeout_score_zero: bool,
    pub first_player: usize,
}

impl GameConfig {
    pub fn with_seed(seed: u64) -> GameConfig {
        GameConfig {
            seed,
            ..GameConfig::default()
        }
    }
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            seed: 0,
            strikeout_score_zero: true,
            first_player: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandSlot {
    pub card: Card,
    pub knowledge: CardKnowledge,
    pub singled_out: bool,
    pub drawn_turn: u32,
}

impl HandSlot {
    pub fn fresh(card: Card, turn: u32) -> HandSlot {
        HandSlot {
            card,
            knowledge: CardKnowledge::full(),
            singled_out: false,
            drawn_turn: turn,
        }
    }
}

pub type Hand = [Option<HandSlot>; HAND_SIZE];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllegalReason {
    EmptySlot,
    TokensFull,
    NoTokens,
    EmptyClue,
}

impl IllegalReason {
    pub fn code(self) -> &'static str {
        match self {
            IllegalReason::EmptySlot => "empty_slot",
            IllegalReason::TokensFull => "tokens_full",
            IllegalReason::NoTokens => "no_tokens",
            IllegalReason::EmptyClue => "empty_clue",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("game is already over")]
    Terminal,
    #[error("illegal action {action}: {}", reason.code())]
    Illegal { action: Action, reason: IllegalReason },
    #[error("player {0} out of range")]
    BadPlayer(usize),
    #[error("slot {slot} of player {player} is empty")]
    EmptySlot { player: usize, slot: usize },
}

/// Ground-truth record of a transition, used to audit factor predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub action: Action,
    pub actor: usize,
    pub strikes_before: u8,
    /// Card that left the actor's hand (play/discard).
    pub card: Option<Card>,
    pub slot_singled_out: bool,
    pub playable: Option<bool>,
    pub endangered: Option<bool>,
    pub unneeded: Option<bool>,
    pub strike: bool,
    /// Partner slots touched by a clue, with the playability of each touched card.
    pub touched: Vec<usize>,
    pub touched_playable: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub deck: Vec<Card>,
    pub hands: [Hand; NUM_PLAYERS],
    pub fireworks: [u8; NUM_COLORS],
    pub discards: Vec<Card>,
    pub info_tokens: u8,
    pub strikes: u8,
    pub current_player: usize,
    pub turns_after_deck_empty: u8,
    pub turn_number: u32,
    pub strikeout_score_zero: bool,
}

/// Deterministic Fisher-Yates shuffle driven by ChaCha8 seeded from `seed`.
pub fn shuffled_deck(seed: u64) -> Vec<Card> {
    let mut deck = full_deck();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..deck.len()).rev() {
        let j = rng.random_range(0..=i);
        deck.swap(i, j);
    }
    deck
}

impl GameState {
    pub fn new(config: GameConfig) -> GameState {
        let mut deck = shuffled_deck(config.seed);
        let mut hands: [Hand; NUM_PLAYERS] = Default::default();
        for slot in 0..HAND_SIZE {
            for hand in hands.iter_mut() {
                let card = deck.pop().expect("deck holds enough cards for the deal");
                hand[slot] = Some(HandSlot::fresh(card, 0));
            }
        }
        GameState {
            deck,
            hands,
            fireworks: [0; NUM_COLORS],
            discards: Vec::new(),
            info_tokens: MAX_INFO_TOKENS,
            strikes: 0,
            current_player: config.first_player % NUM_PLAYERS,
            turns_after_deck_empty: 0,
            turn_number: 0,
            strikeout_score_zero: config.strikeout_score_zero,
        }
    }

    pub fn partner(player: usize) -> usize {
        1 - player
    }

    pub fn score(&self) -> u8 {
        self.fireworks.iter().sum()
    }

    pub fn slot(&self, player: usize, slot: usize) -> Option<&HandSlot> {
        self.hands.get(player)?.get(slot)?.as_ref()
    }

    pub fn is_playable(&self, card: Card) -> bool {
        self.fireworks[card.color.index()] + 1 == card.rank
    }

    pub fn is_played(&self, card: Card) -> bool {
        self.fireworks[card.color.index()] >= card.rank
    }

    pub fn discarded_count(&self, card: Card) -> u8 {
        self.discards.iter().filter(|&&c| c == card).count() as u8
    }

    /// Unplayed with exactly one copy left outside the discard pile.
    pub fn is_endangered(&self, card: Card) -> bool {
        !self.is_played(card) && copies_of_rank(card.rank) - self.discarded_count(card) == 1
    }

    /// Already played, or blocked because every copy of a lower rank it needs was discarded.
    pub fn is_unneeded(&self, card: Card) -> bool {
        if self.is_played(card) {
            return true;
        }
        let height = self.fireworks[card.color.index()];
        (height + 1..card.rank).any(|r| {
            let needed = Card::new(card.color, r);
            self.discarded_count(needed) >= copies_of_rank(r)
        })
    }

    /// Final score once the game is over, `None` while it is live.
    pub fn is_terminal(&self) -> Option<u8> {
        if self.strikes >= MAX_STRIKES {
            return Some(if self.strikeout_score_zero { 0 } else { self.score() });
        }
        if self.fireworks.iter().all(|&h| h as usize == NUM_RANKS) {
            return Some(MAX_SCORE);
        }
        if self.turns_after_deck_empty >= 2 {
            return Some(self.score());
        }
        None
    }

    /// Partner slots a clue would touch.
    pub fn clue_touches(&self, target: usize, clue: Clue) -> Vec<usize> {
        self.hands[target]
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().filter(|s| clue.matches(s.card)).map(|_| i))
            .collect()
    }

    pub fn legality(&self, action: Action) -> Result<(), IllegalReason> {
        let actor = self.current_player;
        match action.kind() {
            ActionKind::Play(slot) => {
                if self.hands[actor][slot].is_none() {
                    return Err(IllegalReason::EmptySlot);
                }
            }
            ActionKind::Discard(slot) => {
                if self.hands[actor][slot].is_none() {
                    return Err(IllegalReason::EmptySlot);
                }
                if self.info_tokens >= MAX_INFO_TOKENS {
                    return Err(IllegalReason::TokensFull);
                }
            }
            ActionKind::ClueColor(_) | ActionKind::ClueRank(_) => {
                if self.info_tokens == 0 {
                    return Err(IllegalReason::NoTokens);
                }
                let clue = action.clue().expect("clue action");
                if self.clue_touches(Self::partner(actor), clue).is_empty() {
                    return Err(IllegalReason::EmptyClue);
                }
            }
        }
        Ok(())
    }

    pub fn legal_actions(&self) -> Result<LegalMask, EngineError> {
        if self.is_terminal().is_some() {
            return Err(EngineError::Terminal);
        }
        let mut mask = LegalMask::none();
        for action in Action::all() {
            mask.0[action.index()] = self.legality(action).is_ok();
        }
        Ok(mask)
    }

    pub fn apply_action(&self, action: Action) -> Result<(GameState, ActionOutcome), EngineError> {
        if self.is_terminal().is_some() {
            return Err(EngineError::Terminal);
        }
        self.legality(action)
            .map_err(|reason| EngineError::Illegal { action, reason })?;

        let actor = self.current_player;
        let partner = Self::partner(actor);
        let deck_was_empty = self.deck.is_empty();
        let mut next = self.clone();
        let mut outcome = ActionOutcome {
            action,
            actor,
            strikes_before: self.strikes,
            card: None,
            slot_singled_out: false,
            playable: None,
            endangered: None,
            unneeded: None,
            strike: false,
            touched: Vec::new(),
            touched_playable: Vec::new(),
        };

        match action.kind() {
            ActionKind::Play(slot) | ActionKind::Discard(slot) => {
                let removed = next.hands[actor][slot].take().expect("legality checked slot");
                let card = removed.card;
                outcome.card = Some(card);
                outcome.slot_singled_out = removed.singled_out;
                outcome.playable = Some(self.is_playable(card));
                outcome.endangered = Some(self.is_endangered(card));
                outcome.unneeded = Some(self.is_unneeded(card));

                if matches!(action.kind(), ActionKind::Play(_)) {
                    if self.is_playable(card) {
                        next.fireworks[card.color.index()] += 1;
                        if card.rank as usize == NUM_RANKS && next.info_tokens < MAX_INFO_TOKENS {
                            next.info_tokens += 1;
                        }
                    } else {
                        next.strikes += 1;
                        outcome.strike = true;
                        next.discards.push(card);
                    }
                } else {
                    next.discards.push(card);
                    next.info_tokens += 1;
                }

                if let Some(drawn) = next.deck.pop() {
                    next.hands[actor][slot] = Some(HandSlot::fresh(drawn, self.turn_number + 1));
                }
            }
            ActionKind::ClueColor(_) | ActionKind::ClueRank(_) => {
                let clue = action.clue().expect("clue action");
                next.info_tokens -= 1;
                let touched = self.clue_touches(partner, clue);
                for (i, slot) in next.hands[partner].iter_mut().enumerate() {
                    if let Some(slot) = slot {
                        let hit = touched.contains(&i);
                        slot.knowledge = slot
                            .knowledge
                            .apply_clue(clue, hit)
                            .expect("true card always satisfies truthful clues");
                    }
                }
                if let [only] = touched[..] {
                    if let Some(slot) = next.hands[partner][only].as_mut() {
                        slot.singled_out = true;
                    }
                }
                outcome.touched_playable = touched
                    .iter()
                    .map(|&i| self.is_playable(self.hands[partner][i].as_ref().expect("touched").card))
                    .collect();
                outcome.touched = touched;
            }
        }

        if deck_was_empty {
            next.turns_after_deck_empty += 1;
        }
        next.turn_number += 1;
        next.current_player = partner;
        Ok((next, outcome))
    }

    /// Count of each identity across the given zones (indexed by `Card::identity_index`).
    fn census(&self, include_deck: bool) -> [u8; NUM_COLORS * NUM_RANKS] {
        let mut counts = [0u8; NUM_COLORS * NUM_RANKS];
        let hand_cards = self.hands.iter().flatten().flatten().map(|s| s.card);
        let deck = self.deck.iter().filter(|_| include_deck);
        for card in deck.chain(self.discards.iter()).copied().chain(hand_cards) {
            counts[card.identity_index()] += 1;
        }
        for color in Color::ALL {
            for rank in 1..=self.fireworks[color.index()] {
                counts[Card::new(color, rank).identity_index()] += 1;
            }
        }
        counts
    }

    /// Cards outside hands, discards and fireworks, in canonical order.
    /// For a consistent state this is the deck contents, ignoring order.
    pub fn unaccounted_cards(&self) -> Vec<Card> {
        let census = self.census(false);
        let mut out = Vec::new();
        for (index, &seen) in census.iter().enumerate() {
            let card = Card::from_identity_index(index);
            for _ in seen..copies_of_rank(card.rank) {
                out.push(card);
            }
        }
        out
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let census = self.census(true);
        for (index, &n) in census.iter().enumerate() {
            let card = Card::from_identity_index(index);
            if n != copies_of_rank(card.rank) {
                return Err(format!("card conservation: {card} counted {n} times"));
            }
        }
        if self.info_tokens > MAX_INFO_TOKENS {
            return Err(format!("info tokens {}", self.info_tokens));
        }
        if self.strikes > MAX_STRIKES {
            return Err(format!("strikes {}", self.strikes));
        }
        if let Some(h) = self.fireworks.iter().find(|&&h| h as usize > NUM_RANKS) {
            return Err(format!("firework height {h}"));
        }
        if self.current_player >= NUM_PLAYERS {
            return Err(format!("current player {}", self.current_player));
        }
        for (p, hand) in self.hands.iter().enumerate() {
            for (i, slot) in hand.iter().enumerate() {
                if let Some(slot) = slot {
                    if !slot.knowledge.admits(slot.card) {
                        return Err(format!("knowledge of player {p} slot {i} excludes {}", slot.card));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put(state: &mut GameState, player: usize, slot: usize, card: Card) {
        state.hands[player][slot] = Some(HandSlot::fresh(card, 0));
    }

    #[test]
    fn action_index_is_bijective() {
        for action in Action::all() {
            assert_eq!(Action::from_kind(action.kind()), action);
        }
        assert_eq!(Action::clue_rank(5).index(), 19);
        assert_eq!(Action::clue_color(Color::Red).index(), 10);
        assert!(Action::from_index(20).is_none());
    }

    #[test]
    fn new_game_setup() {
        let s = GameState::new(GameConfig::with_seed(7));
        assert_eq!(s.deck.len(), 40);
        assert!(s.hands.iter().all(|h| h.iter().all(Option::is_some)));
        assert_eq!((s.info_tokens, s.strikes, s.score()), (8, 0, 0));
        assert!(s.hands.iter().flatten().flatten().all(|slot| !slot.singled_out));
        s.check_invariants().unwrap();
        assert_eq!(s.deck, GameState::new(GameConfig::with_seed(7)).deck);
    }

    #[test]
    fn initial_discards_illegal_at_eight_tokens() {
        let s = GameState::new(GameConfig::with_seed(1));
        let mask = s.legal_actions().unwrap();
        assert!((0..5).all(|i| mask.is_legal(i)));
        assert!((5..10).all(|i| !mask.is_legal(i)));
        assert_eq!(s.legality(Action::discard(0)), Err(IllegalReason::TokensFull));
    }

    #[test]
    fn no_tokens_disables_every_clue() {
        let mut s = GameState::new(GameConfig::with_seed(2));
        s.info_tokens = 0;
        let mask = s.legal_actions().unwrap();
        assert!((10..20).all(|i| !mask.is_legal(i)));
    }

    #[test]
    fn empty_clue_is_illegal() {
        let mut s = GameState::new(GameConfig::with_seed(3));
        for slot in 0..5 {
            put(&mut s, 1, slot, Card::new(Color::Red, 1));
        }
        let mask = s.legal_actions().unwrap();
        assert!(!mask.is_legal(Action::clue_rank(5).index()));
        assert!(mask.is_legal(Action::clue_rank(1).index()));
        assert_eq!(s.legality(Action::clue_color(Color::Blue)), Err(IllegalReason::EmptyClue));
    }

    #[test]
    fn playing_a_one_builds_the_stack() {
        let mut s = GameState::new(GameConfig::with_seed(4));
        put(&mut s, 0, 0, Card::new(Color::Red, 1));
        let (next, out) = s.apply_action(Action::play(0)).unwrap();
        assert_eq!(next.fireworks[0], 1);
        assert_eq!(next.strikes, 0);
        assert_eq!(out.playable, Some(true));
        assert_eq!(next.current_player, 1);
    }

    #[test]
    fn misplay_strikes_and_discards() {
        let mut s = GameState::new(GameConfig::with_seed(4));
        put(&mut s, 0, 2, Card::new(Color::Red, 3));
        s.deck.retain(|&c| c != Card::new(Color::Red, 3));
        s.deck.push(Card::new(Color::Red, 3));
        let (next, out) = s.apply_action(Action::play(2)).unwrap();
        assert_eq!(next.strikes, 1);
        assert!(out.strike);
        assert_eq!(next.discards, vec![Card::new(Color::Red, 3)]);
    }

    #[test]
    fn discard_regains_a_token() {
        let mut s = GameState::new(GameConfig::with_seed(5));
        s.info_tokens = 7;
        let (next, _) = s.apply_action(Action::discard(1)).unwrap();
        assert_eq!(next.info_tokens, 8);
        assert_eq!(next.discards.len(), 1);
        assert!(next.hands[0][1].is_some());
    }

    #[test]
    fn completing_a_stack_returns_a_token() {
        let mut s = GameState::new(GameConfig::with_seed(6));
        s.fireworks[2] = 4;
        s.info_tokens = 5;
        put(&mut s, 0, 0, Card::new(Color::Green, 5));
        let (next, _) = s.apply_action(Action::play(0)).unwrap();
        assert_eq!(next.fireworks[2], 5);
        assert_eq!(next.info_tokens, 6);
    }

    #[test]
    fn singled_out_flag_follows_single_card_clues() {
        let mut s = GameState::new(GameConfig::with_seed(8));
        put(&mut s, 1, 0, Card::new(Color::Red, 1));
        put(&mut s, 1, 1, Card::new(Color::Blue, 2));
        put(&mut s, 1, 2, Card::new(Color::Blue, 3));
        put(&mut s, 1, 3, Card::new(Color::Green, 4));
        put(&mut s, 1, 4, Card::new(Color::Yellow, 4));

        let (one, out) = s.apply_action(Action::clue_color(Color::Red)).unwrap();
        assert_eq!(out.touched, vec![0]);
        assert!(one.hands[1][0].as_ref().unwrap().singled_out);
        assert_eq!(one.info_tokens, 7);

        let (two, out) = s.apply_action(Action::clue_color(Color::Blue)).unwrap();
        assert_eq!(out.touched, vec![1, 2]);
        assert!(two.hands[1].iter().flatten().all(|slot| !slot.singled_out));
    }

    #[test]
    fn singled_out_survives_later_multi_card_clue_and_clears_on_leave() {
        let mut s = GameState::new(GameConfig::with_seed(9));
        put(&mut s, 1, 0, Card::new(Color::Red, 1));
        put(&mut s, 1, 1, Card::new(Color::Blue, 1));
        put(&mut s, 1, 2, Card::new(Color::Blue, 3));
        put(&mut s, 1, 3, Card::new(Color::Green, 4));
        put(&mut s, 1, 4, Card::new(Color::Yellow, 4));
        let (s, _) = s.apply_action(Action::clue_color(Color::Red)).unwrap();
        let (s, _) = s.apply_action(Action::play(4)).unwrap();
        assert!(s.hands[1][0].as_ref().unwrap().singled_out);
        let (s, _) = s.apply_action(Action::clue_rank(1)).unwrap();
        assert!(s.hands[1][0].as_ref().unwrap().singled_out);
        assert!(!s.hands[1][1].as_ref().unwrap().singled_out);
        let (s, out) = s.apply_action(Action::play(0)).unwrap();
        assert!(out.slot_singled_out);
        assert!(!s.hands[1][0].as_ref().unwrap().singled_out);
    }

    #[test]
    fn terminal_conditions() {
        let mut s = GameState::new(GameConfig::with_seed(10));
        s.strikes = 1;
        assert_eq!(s.is_terminal(), None);
        s.strikes = 3;
        s.fireworks = [2, 2, 2, 2, 2];
        assert_eq!(s.is_terminal(), Some(0));
        s.strikeout_score_zero = false;
        assert_eq!(s.is_terminal(), Some(10));
        s.strikes = 0;
        s.fireworks = [5; 5];
        assert_eq!(s.is_terminal(), Some(25));
        s.fireworks = [1, 0, 0, 0, 0];
        s.turns_after_deck_empty = 2;
        assert_eq!(s.is_terminal(), Some(1));
        assert_eq!(s.legal_actions(), Err(EngineError::Terminal));
    }

    #[test]
    fn illegal_action_is_rejected_with_reason() {
        let s = GameState::new(GameConfig::with_seed(11));
        let err = s.apply_action(Action::discard(0)).unwrap_err();
        assert_eq!(
            err,
            EngineError::Illegal {
                action: Action::discard(0),
                reason: IllegalReason::TokensFull
            }
        );
    }

    #[test]
    fn last_round_lasts_two_turns() {
        let mut s = GameState::new(GameConfig::with_seed(12));
        let spare: Vec<Card> = s.deck.drain(..).collect();
        s.discards.extend(spare.iter().skip(1));
        s.deck.push(spare[0]);
        s.info_tokens = 3;
        s.check_invariants().unwrap();
        let (s, _) = s.apply_action(Action::discard(0)).unwrap();
        assert!(s.deck.is_empty());
        assert_eq!(s.turns_after_deck_empty, 0);
        let (s, _) = s.apply_action(Action::discard(0)).unwrap();
        assert_eq!(s.turns_after_deck_empty, 1);
        assert!(s.hands[1][0].is_none());
        assert_eq!(s.is_terminal(), None);
        let (s, _) = s.apply_action(Action::discard(1)).unwrap();
        assert_eq!(s.is_terminal(), Some(s.score()));
    }

    #[test]
    fn endangered_and_unneeded_predicates() {
        let mut s = GameState::new(GameConfig::with_seed(13));
        let five = Card::new(Color::Red, 5);
        assert!(s.is_endangered(five));
        let two = Card::new(Color::Red, 2);
        assert!(!s.is_endangered(two));
        s.discards.push(two);
        assert!(s.is_endangered(two));
        s.discards.push(two);
        assert!(s.is_unneeded(Card::new(Color::Red, 3)));
        s.fireworks[1] = 2;
        assert!(s.is_unneeded(Card::new(Color::Yellow, 2)));
        assert!(!s.is_unneeded(Card::new(Color::Yellow, 3)));
    }
}
