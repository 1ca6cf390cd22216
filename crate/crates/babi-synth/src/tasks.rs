use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::Story;

type R = ChaCha8Rng;

const ACTORS: [&str; 4] = ["Mary", "John", "Daniel", "Sandra"];
const LOCATIONS: [&str; 6] = [
    "hallway", "bathroom", "office", "bedroom", "kitchen", "garden",
];
const MOVES: [&str; 5] = [
    "moved to",
    "went to",
    "journeyed to",
    "travelled to",
    "went back to",
];
const OBJECTS: [&str; 3] = ["football", "apple", "milk"];
const GETS: [&str; 4] = ["picked up", "got", "grabbed", "took"];
const DROPS: [&str; 4] = ["dropped", "discarded", "put down", "left"];
const NUMBERS: [&str; 4] = ["none", "one", "two", "three"];

const CITY_ACTORS: [&str; 4] = ["Bill", "Fred", "Julie", "Mary"];
const CITY_PLACES: [&str; 6] = ["school", "park", "office", "kitchen", "bedroom", "cinema"];

fn pick<T: Copy>(rng: &mut R, xs: &[T]) -> T {
    *xs.choose(rng).expect("non-empty choice")
}

fn pick_other<T: Copy + PartialEq>(rng: &mut R, xs: &[T], not: T) -> T {
    loop {
        let x = pick(rng, xs);
        if x != not {
            return x;
        }
    }
}

pub(crate) fn story(task: usize, rng: &mut R) -> Story {
    match task {
        1 => single_supporting_fact(rng),
        2 => objects_world(rng, ObjectQuestion::Where),
        3 => objects_world(rng, ObjectQuestion::WhereBefore),
        4 => two_arg_relations(rng),
        5 => three_arg_relations(rng),
        6 => objects_world(rng, ObjectQuestion::YesNo),
        7 => objects_world(rng, ObjectQuestion::Count),
        8 => objects_world(rng, ObjectQuestion::List),
        9 => simple_negation(rng),
        10 => indefinite_knowledge(rng),
        11 => basic_coreference(rng),
        12 => conjunction(rng),
        13 => compound_coreference(rng),
        14 => time_reasoning(rng),
        15 => basic_deduction(rng),
        16 => basic_induction(rng),
        17 => positional_reasoning(rng),
        18 => size_reasoning(rng),
        19 => path_finding(rng),
        20 => agents_motivations(rng),
        _ => unreachable!("task checked by caller"),
    }
}

/// Asks "Where is X?" about a random actor whose location is known.
fn ask_where(rng: &mut R, s: &mut Story, at: &BTreeMap<&str, (&str, Vec<usize>)>) {
    let known: Vec<&str> = at.keys().copied().collect();
    let actor = pick(rng, &known);
    let (loc, support) = &at[actor];
    s.ask(format!("Where is {actor}?"), *loc, support);
}

fn single_supporting_fact(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut at = BTreeMap::new();
    for _ in 0..5 {
        for _ in 0..2 {
            let actor = pick(rng, &ACTORS);
            let loc = match at.get(actor) {
                Some(&(cur, _)) => pick_other(rng, &LOCATIONS, cur),
                None => pick(rng, &LOCATIONS),
            };
            let id = s.say(format!("{actor} {} the {loc}.", pick(rng, &MOVES)));
            at.insert(actor, (loc, vec![id]));
        }
        ask_where(rng, &mut s, &at);
    }
    s
}

fn conjunction(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut at = BTreeMap::new();
    for _ in 0..5 {
        for _ in 0..2 {
            let a = pick(rng, &ACTORS);
            let b = pick_other(rng, &ACTORS, a);
            let loc = pick(rng, &LOCATIONS);
            let id = s.say(format!("{a} and {b} {} the {loc}.", pick(rng, &MOVES)));
            at.insert(a, (loc, vec![id]));
            at.insert(b, (loc, vec![id]));
        }
        ask_where(rng, &mut s, &at);
    }
    s
}

fn pronoun(actor: &str) -> &'static str {
    match actor {
        "Mary" | "Sandra" => "she",
        _ => "he",
    }
}

const THEN: [&str; 4] = ["Then", "After that", "Afterwards", "Following that"];

fn basic_coreference(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut at = BTreeMap::new();
    let mut last: Option<&str> = None;
    for _ in 0..5 {
        for _ in 0..2 {
            let loc = pick(rng, &LOCATIONS);
            let verb = pick(rng, &MOVES);
            let (actor, id) = match last {
                Some(prev) if rng.random_bool(0.5) => {
                    let id = s.say(format!(
                        "{} {} {verb} the {loc}.",
                        pick(rng, &THEN),
                        pronoun(prev)
                    ));
                    (prev, id)
                }
                _ => {
                    let a = pick(rng, &ACTORS);
                    (a, s.say(format!("{a} {verb} the {loc}.")))
                }
            };
            at.insert(actor, (loc, vec![id]));
            last = Some(actor);
        }
        ask_where(rng, &mut s, &at);
    }
    s
}

fn compound_coreference(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut at = BTreeMap::new();
    let mut last: Option<(&str, &str)> = None;
    for _ in 0..5 {
        for _ in 0..2 {
            let loc = pick(rng, &LOCATIONS);
            let verb = pick(rng, &MOVES);
            let (pair, id) = match last {
                Some(p) if rng.random_bool(0.5) => (
                    p,
                    s.say(format!("{} they {verb} the {loc}.", pick(rng, &THEN))),
                ),
                _ => {
                    let a = pick(rng, &ACTORS);
                    let b = pick_other(rng, &ACTORS, a);
                    ((a, b), s.say(format!("{a} and {b} {verb} the {loc}.")))
                }
            };
            at.insert(pair.0, (loc, vec![id]));
            at.insert(pair.1, (loc, vec![id]));
            last = Some(pair);
        }
        ask_where(rng, &mut s, &at);
    }
    s
}

#[derive(Clone, Copy, PartialEq)]
enum ObjectQuestion {
    Where,
    WhereBefore,
    YesNo,
    Count,
    List,
}

/// Actors moving between rooms and carrying objects.
#[derive(Default)]
struct World<'a> {
    at: BTreeMap<&'a str, (&'a str, usize)>,
    holding: BTreeMap<&'a str, (&'a str, usize)>,
    placed: BTreeMap<&'a str, (&'a str, Vec<usize>)>,
    history: BTreeMap<&'a str, Vec<(&'a str, Vec<usize>)>>,
}

impl<'a> World<'a> {
    fn carried_by(&self, actor: &str) -> Vec<(&'a str, usize)> {
        let mut v: Vec<_> = self
            .holding
            .iter()
            .filter(|(_, (a, _))| *a == actor)
            .map(|(o, (_, id))| (*o, *id))
            .collect();
        v.sort_by_key(|&(_, id)| id);
        v
    }

    fn record(&mut self, object: &'a str, loc: &'a str, support: Vec<usize>) {
        let h = self.history.entry(object).or_default();
        match h.last_mut() {
            Some((l, sup)) if *l == loc => *sup = support,
            _ => h.push((loc, support)),
        }
    }

    fn object_location(&self, object: &str) -> Option<(&'a str, Vec<usize>)> {
        if let Some(&(actor, got)) = self.holding.get(object) {
            let &(loc, moved) = self.at.get(actor)?;
            return Some((loc, vec![got, moved]));
        }
        self.placed.get(object).cloned()
    }

    fn act(&mut self, rng: &mut R, s: &mut Story, with_objects: bool) {
        let actor = pick(rng, &ACTORS);
        let roll: f64 = rng.random();
        let here = self.at.get(actor).copied();
        if let Some((loc, moved)) = here.filter(|_| with_objects && roll < 0.25) {
            let free: Vec<&str> = OBJECTS
                .iter()
                .copied()
                .filter(|o| {
                    !self.holding.contains_key(o)
                        && self.placed.get(o).is_none_or(|(l, _)| *l == loc)
                })
                .collect();
            if let Some(&object) = free.choose(rng) {
                let there = if rng.random_bool(0.5) { " there" } else { "" };
                let id = s.say(format!("{actor} {} the {object}{there}.", pick(rng, &GETS)));
                self.placed.remove(object);
                self.holding.insert(object, (actor, id));
                self.record(object, loc, vec![id, moved]);
                return;
            }
        }
        if let Some((loc, moved)) = here.filter(|_| with_objects && roll < 0.4) {
            if let Some(&(object, _)) = self.carried_by(actor).choose(rng) {
                let id = s.say(format!("{actor} {} the {object}.", pick(rng, &DROPS)));
                self.holding.remove(object);
                self.placed.insert(object, (loc, vec![id, moved]));
                self.record(object, loc, vec![id, moved]);
                return;
            }
        }
        let loc = match here {
            Some((cur, _)) => pick_other(rng, &LOCATIONS, cur),
            None => pick(rng, &LOCATIONS),
        };
        let id = s.say(format!("{actor} {} the {loc}.", pick(rng, &MOVES)));
        self.at.insert(actor, (loc, id));
        for (object, got) in self.carried_by(actor) {
            self.record(object, loc, vec![got, id]);
        }
    }

    fn question(&self, rng: &mut R, s: &mut Story, kind: ObjectQuestion) -> bool {
        match kind {
            ObjectQuestion::Where => {
                let known: Vec<_> = OBJECTS
                    .iter()
                    .filter_map(|o| self.object_location(o).map(|l| (*o, l)))
                    .collect();
                let Some((object, (loc, support))) = known.choose(rng).cloned() else {
                    return false;
                };
                s.ask(format!("Where is the {object}?"), loc, &support);
            }
            ObjectQuestion::WhereBefore => {
                let known: Vec<_> = self.history.iter().filter(|(_, h)| h.len() >= 2).collect();
                let Some(&(object, h)) = known.choose(rng) else {
                    return false;
                };
                let (now, sup_now) = &h[h.len() - 1];
                let (before, sup_before) = &h[h.len() - 2];
                let support: Vec<usize> = sup_now.iter().chain(sup_before).copied().collect();
                s.ask(
                    format!("Where was the {object} before the {now}?"),
                    *before,
                    &support,
                );
            }
            ObjectQuestion::YesNo => {
                let known: Vec<_> = self.at.iter().collect();
                let Some(&(actor, &(loc, id))) = known.choose(rng) else {
                    return false;
                };
                let (asked, answer) = if rng.random_bool(0.5) {
                    (loc, "yes")
                } else {
                    (pick_other(rng, &LOCATIONS, loc), "no")
                };
                s.ask(format!("Is {actor} in the {asked}?"), answer, &[id]);
            }
            ObjectQuestion::Count | ObjectQuestion::List => {
                let actor = pick(rng, &ACTORS);
                let carried = self.carried_by(actor);
                let support: Vec<usize> = carried.iter().map(|&(_, id)| id).collect();
                if kind == ObjectQuestion::Count {
                    s.ask(
                        format!("How many objects is {actor} carrying?"),
                        NUMBERS[carried.len()],
                        &support,
                    );
                } else {
                    let answer = if carried.is_empty() {
                        "nothing".to_string()
                    } else {
                        carried
                            .iter()
                            .map(|&(o, _)| o)
                            .collect::<Vec<_>>()
                            .join(",")
                    };
                    s.ask(format!("What is {actor} carrying?"), answer, &support);
                }
            }
        }
        true
    }
}

fn objects_world(rng: &mut R, kind: ObjectQuestion) -> Story {
    let mut s = Story::default();
    let mut w = World::default();
    let with_objects = kind != ObjectQuestion::YesNo || rng.random_bool(0.5);
    let mut since_question = 0;
    for _ in 0..60 {
        w.act(rng, &mut s, with_objects);
        since_question += 1;
        if since_question >= 2 && rng.random_bool(0.5) && w.question(rng, &mut s, kind) {
            since_question = 0;
            if s.questions() == 5 {
                break;
            }
        }
    }
    s
}

const ROOMS: [&str; 6] = [
    "office", "bedroom", "bathroom", "kitchen", "hallway", "garden",
];
const DIRECTIONS: [&str; 4] = ["north", "south", "east", "west"];

fn opposite(dir: &str) -> &'static str {
    match dir {
        "north" => "south",
        "south" => "north",
        "east" => "west",
        _ => "east",
    }
}

fn two_arg_relations(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut rooms = ROOMS.to_vec();
    rooms.shuffle(rng);
    let (a, b, c) = (rooms[0], rooms[1], rooms[2]);
    let d1 = pick(rng, &DIRECTIONS);
    let d2 = pick_other(rng, &DIRECTIONS, opposite(d1));
    let i1 = s.say(format!("The {a} is {d1} of the {b}."));
    let i2 = s.say(format!("The {b} is {d2} of the {c}."));
    let facts = [(a, d1, b, i1), (b, d2, c, i2)];
    let (x, d, y, id) = facts[rng.random_range(0..2)];
    if rng.random_bool(0.5) {
        s.ask(format!("What is {d} of the {y}?"), x, &[id]);
    } else {
        s.ask(format!("What is the {x} {d} of?"), y, &[id]);
    }
    s
}

const GIVERS: [&str; 4] = ["Fred", "Bill", "Jeff", "Mary"];
const GIVES: [&str; 3] = ["gave", "handed", "passed"];

fn three_arg_relations(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut at: BTreeMap<&str, &str> = BTreeMap::new();
    let mut holding: BTreeMap<&str, &str> = BTreeMap::new();
    for _ in 0..40 {
        let actor = pick(rng, &GIVERS);
        let mine: Vec<&str> = holding
            .iter()
            .filter(|(_, a)| **a == actor)
            .map(|(o, _)| *o)
            .collect();
        let roll: f64 = rng.random();
        if roll < 0.4 && !mine.is_empty() {
            let object = pick(rng, &mine);
            let to = pick_other(rng, &GIVERS, actor);
            let id = s.say(format!(
                "{actor} {} the {object} to {to}.",
                pick(rng, &GIVES)
            ));
            holding.insert(object, to);
            at.insert(to, at.get(actor).copied().unwrap_or("office"));
            match rng.random_range(0..5) {
                0 => s.ask(format!("Who gave the {object}?"), actor, &[id]),
                1 => s.ask(format!("Who received the {object}?"), to, &[id]),
                2 => s.ask(format!("Who did {actor} give the {object} to?"), to, &[id]),
                3 => s.ask(format!("What did {actor} give to {to}?"), object, &[id]),
                _ => s.ask(format!("Who gave the {object} to {to}?"), actor, &[id]),
            }
            if s.questions() == 5 {
                break;
            }
        } else if roll < 0.7 {
            let free: Vec<&str> = OBJECTS
                .iter()
                .copied()
                .filter(|o| !holding.contains_key(o))
                .collect();
            if let Some(&object) = free.choose(rng) {
                s.say(format!("{actor} {} the {object} there.", pick(rng, &GETS)));
                holding.insert(object, actor);
            }
        } else {
            let loc = pick(rng, &LOCATIONS);
            s.say(format!("{actor} {} the {loc}.", pick(rng, &MOVES)));
            at.insert(actor, loc);
        }
    }
    s
}

fn simple_negation(rng: &mut R) -> Story {
    let mut s = Story::default();
    // actor -> (known location, excluded location, support)
    let mut state: BTreeMap<&str, (Option<&str>, Option<&str>, usize)> = BTreeMap::new();
    for _ in 0..5 {
        for _ in 0..2 {
            let actor = pick(rng, &ACTORS);
            let loc = pick(rng, &LOCATIONS);
            if rng.random_bool(0.3) {
                let phrase = if rng.random_bool(0.5) {
                    "is not in"
                } else {
                    "is no longer in"
                };
                let id = s.say(format!("{actor} {phrase} the {loc}."));
                state.insert(actor, (None, Some(loc), id));
            } else {
                let id = if rng.random_bool(0.5) {
                    s.say(format!("{actor} is in the {loc}."))
                } else {
                    s.say(format!("{actor} {} the {loc}.", pick(rng, &MOVES)))
                };
                state.insert(actor, (Some(loc), None, id));
            }
        }
        let known: Vec<_> = state.iter().map(|(a, v)| (*a, *v)).collect();
        let (actor, (pos, neg, id)) = pick(rng, &known);
        match (pos, neg) {
            (Some(loc), _) if rng.random_bool(0.5) => {
                s.ask(format!("Is {actor} in the {loc}?"), "yes", &[id])
            }
            (Some(loc), _) => s.ask(
                format!("Is {actor} in the {}?", pick_other(rng, &LOCATIONS, loc)),
                "no",
                &[id],
            ),
            (None, Some(loc)) => s.ask(format!("Is {actor} in the {loc}?"), "no", &[id]),
            (None, None) => unreachable!("every statement sets one side"),
        }
    }
    s
}

fn indefinite_knowledge(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut state: BTreeMap<&str, (Vec<&str>, usize)> = BTreeMap::new();
    for _ in 0..5 {
        for _ in 0..2 {
            let actor = pick(rng, &CITY_ACTORS);
            let a = pick(rng, &CITY_PLACES);
            if rng.random_bool(0.5) {
                let b = pick_other(rng, &CITY_PLACES, a);
                let id = s.say(format!("{actor} is either in the {a} or the {b}."));
                state.insert(actor, (vec![a, b], id));
            } else {
                let id = if rng.random_bool(0.5) {
                    s.say(format!("{actor} is in the {a}."))
                } else {
                    s.say(format!("{actor} {} the {a}.", pick(rng, &MOVES)))
                };
                state.insert(actor, (vec![a], id));
            }
        }
        let known: Vec<_> = state.keys().copied().collect();
        let actor = pick(rng, &known);
        let (places, id) = &state[actor];
        let asked = if rng.random_bool(0.6) {
            pick(rng, places)
        } else {
            pick(rng, &CITY_PLACES)
        };
        let answer = match (places.contains(&asked), places.len()) {
            (false, _) => "no",
            (true, 1) => "yes",
            (true, _) => "maybe",
        };
        s.ask(format!("Is {actor} in the {asked}?"), answer, &[*id]);
    }
    s
}

const TIMES: [&str; 4] = [
    "Yesterday",
    "This morning",
    "This afternoon",
    "This evening",
];

fn time_reasoning(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut actors = CITY_ACTORS.to_vec();
    actors.shuffle(rng);
    let mut events = Vec::new();
    for &actor in &actors[..2] {
        let mut places = CITY_PLACES.to_vec();
        places.shuffle(rng);
        let n = rng.random_range(2..=4);
        for (t, &place) in places.iter().take(n).enumerate() {
            events.push((actor, t, place));
        }
    }
    events.shuffle(rng);
    let mut ids = BTreeMap::new();
    for &(actor, t, place) in &events {
        let verb = pick(
            rng,
            &["went to", "journeyed to", "travelled to", "moved to"],
        );
        let id = s.say(format!("{} {actor} {verb} the {place}.", TIMES[t]));
        ids.insert((actor, t), (place, id));
    }
    for _ in 0..2 {
        let actor = pick(rng, &actors[..2]);
        let last = (1..4)
            .filter(|t| ids.contains_key(&(actor, *t)))
            .max()
            .unwrap_or(1);
        let t = rng.random_range(1..=last);
        let (now, now_id) = ids[&(actor, t)];
        let (before, before_id) = ids[&(actor, t - 1)];
        s.ask(
            format!("Where was {actor} before the {now}?"),
            before,
            &[now_id, before_id],
        );
    }
    s
}

const SPECIES: [(&str, &str); 4] = [
    ("mouse", "Mice"),
    ("cat", "Cats"),
    ("sheep", "Sheep"),
    ("wolf", "Wolves"),
];
const NAMES: [&str; 4] = ["Gertrude", "Emily", "Jessica", "Winona"];

fn basic_deduction(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut lines = Vec::new();
    let fears: Vec<usize> = (0..4).map(|i| (i + rng.random_range(1..4)) % 4).collect();
    for (i, &(_, plural)) in SPECIES.iter().enumerate() {
        lines.push((
            format!(
                "{plural} are afraid of {}.",
                SPECIES[fears[i]].1.to_lowercase()
            ),
            None,
        ));
    }
    let mut kinds = Vec::new();
    for &name in &NAMES {
        let k = rng.random_range(0..4);
        kinds.push(k);
        lines.push((format!("{name} is a {}.", SPECIES[k].0), Some(name)));
    }
    lines.shuffle(rng);
    let mut rule_ids = [0; 4];
    let mut member_ids = BTreeMap::new();
    for (text, who) in &lines {
        let id = s.say(text);
        match who {
            Some(n) => {
                member_ids.insert(*n, id);
            }
            None => {
                let k = SPECIES
                    .iter()
                    .position(|(_, p)| text.starts_with(p))
                    .expect("rule");
                rule_ids[k] = id;
            }
        }
    }
    let mut order: Vec<usize> = (0..4).collect();
    order.shuffle(rng);
    for &i in &order[..3] {
        let k = kinds[i];
        s.ask(
            format!("What is {} afraid of?", NAMES[i]),
            SPECIES[fears[k]].0,
            &[member_ids[NAMES[i]], rule_ids[k]],
        );
    }
    s
}

fn basic_induction(rng: &mut R) -> Story {
    let mut s = Story::default();
    let names = ["Lily", "Bernhard", "Greg", "Julius", "Brian"];
    let animals = ["swan", "lion", "frog", "rhino"];
    let colors = ["white", "yellow", "green", "gray"];
    let mut color_of: Vec<&str> = colors.to_vec();
    color_of.shuffle(rng);
    let mut order = names.to_vec();
    order.shuffle(rng);
    let query = order[4];
    let query_kind = rng.random_range(0..4);
    let mut exemplar = BTreeMap::new();
    let mut pairs = Vec::new();
    for (i, &name) in order[..4].iter().enumerate() {
        let kind = if i == 0 {
            query_kind
        } else {
            rng.random_range(0..4)
        };
        pairs.push((name, kind));
    }
    pairs.shuffle(rng);
    for &(name, kind) in &pairs {
        let a = s.say(format!("{name} is a {}.", animals[kind]));
        let c = s.say(format!("{name} is {}.", color_of[kind]));
        exemplar.insert(kind, (a, c));
    }
    let q = s.say(format!("{query} is a {}.", animals[query_kind]));
    let (a, c) = exemplar[&query_kind];
    s.ask(
        format!("What color is {query}?"),
        color_of[query_kind],
        &[q, a, c],
    );
    s
}

const SHAPES: [&str; 6] = [
    "triangle",
    "red square",
    "blue square",
    "pink rectangle",
    "red sphere",
    "yellow square",
];
const RELATIONS: [(&str, i32, i32); 4] = [
    ("above", 0, 1),
    ("below", 0, -1),
    ("to the left of", -1, 0),
    ("to the right of", 1, 0),
];

fn positional_reasoning(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut shapes = SHAPES.to_vec();
    shapes.shuffle(rng);
    let (a, b, c) = (shapes[0], shapes[1], shapes[2]);
    let (r1, dx1, dy1) = pick(rng, &RELATIONS);
    let (r2, dx2, dy2) = pick(rng, &RELATIONS);
    // a at origin, a = b + (dx1, dy1), c = a + (dx2, dy2)
    let pos_b = (-dx1, -dy1);
    let pos_c = (dx2, dy2);
    let i1 = s.say(format!("The {a} is {r1} the {b}."));
    let i2 = s.say(format!("The {c} is {r2} the {a}."));
    for _ in 0..4 {
        let ((x, px), (y, py)) = if rng.random_bool(0.5) {
            ((b, pos_b), (c, pos_c))
        } else {
            ((c, pos_c), (b, pos_b))
        };
        let (rel, rx, ry) = pick(rng, &RELATIONS);
        let holds = (rx != 0 && (px.0 - py.0) * rx > 0) || (ry != 0 && (px.1 - py.1) * ry > 0);
        s.ask(
            format!("Is the {x} {rel} the {y}?"),
            if holds { "yes" } else { "no" },
            &[i1, i2],
        );
    }
    s
}

const CONTAINERS: [&str; 6] = [
    "chocolate",
    "box of chocolates",
    "container",
    "chest",
    "suitcase",
    "box",
];

fn size_reasoning(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut items = CONTAINERS.to_vec();
    items.shuffle(rng);
    let chain = &items[..4];
    let mut facts: Vec<usize> = (0..3).collect();
    facts.shuffle(rng);
    let mut ids = [0; 3];
    for &i in &facts {
        let (small, big) = (chain[i], chain[i + 1]);
        ids[i] = if rng.random_bool(0.5) {
            s.say(format!("The {small} fits inside the {big}."))
        } else {
            s.say(format!("The {big} is bigger than the {small}."))
        };
    }
    for _ in 0..3 {
        let i = rng.random_range(0..4);
        let j = loop {
            let j = rng.random_range(0..4);
            if j != i {
                break j;
            }
        };
        let support: Vec<usize> = (i.min(j)..i.max(j)).map(|k| ids[k]).collect();
        if rng.random_bool(0.5) {
            let yes = i < j;
            s.ask(
                format!("Does the {} fit in the {}?", chain[i], chain[j]),
                if yes { "yes" } else { "no" },
                &support,
            );
        } else {
            let yes = i > j;
            s.ask(
                format!("Is the {} bigger than the {}?", chain[i], chain[j]),
                if yes { "yes" } else { "no" },
                &support,
            );
        }
    }
    s
}

fn path_finding(rng: &mut R) -> Story {
    const STEPS: [(&str, &str, i32, i32); 4] = [
        ("north", "n", 0, 1),
        ("south", "s", 0, -1),
        ("east", "e", 1, 0),
        ("west", "w", -1, 0),
    ];
    let mut s = Story::default();
    let mut rooms = ROOMS.to_vec();
    rooms.shuffle(rng);
    let rooms = &rooms[..5];
    let mut pos = vec![(0i32, 0i32)];
    // edges: (child, step index, parent)
    let mut edges = Vec::new();
    while pos.len() < rooms.len() {
        let parent = rng.random_range(0..pos.len());
        let k = rng.random_range(0..4);
        let (_, _, dx, dy) = STEPS[k];
        let p = (pos[parent].0 + dx, pos[parent].1 + dy);
        if !pos.contains(&p) {
            edges.push((pos.len(), k, parent));
            pos.push(p);
        }
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.shuffle(rng);
    let mut edge_ids = vec![0; edges.len()];
    for &e in &order {
        let (child, k, parent) = edges[e];
        edge_ids[e] = s.say(format!(
            "The {} is {} of the {}.",
            rooms[child], STEPS[k].0, rooms[parent]
        ));
    }
    // Two-step paths along the tree through a shared neighbour.
    let mut paths = Vec::new();
    for (e1, &(c1, k1, p1)) in edges.iter().enumerate() {
        for (e2, &(c2, k2, p2)) in edges.iter().enumerate() {
            if e1 == e2 {
                continue;
            }
            // walking an edge child->parent uses the opposite step
            let back = |k: usize| match k {
                0 => 1,
                1 => 0,
                2 => 3,
                _ => 2,
            };
            let hops: [(usize, usize, usize); 2] = [(p1, k1, c1), (c1, back(k1), p1)];
            let hops2: [(usize, usize, usize); 2] = [(p2, k2, c2), (c2, back(k2), p2)];
            for &(from, sa, mid) in &hops {
                for &(mid2, sb, to) in &hops2 {
                    if mid == mid2 && from != to {
                        paths.push((from, to, sa, sb, edge_ids[e1], edge_ids[e2]));
                    }
                }
            }
        }
    }
    if let Some(&(from, to, sa, sb, i1, i2)) = paths.choose(rng) {
        s.ask(
            format!(
                "How do you go from the {} to the {}?",
                rooms[from], rooms[to]
            ),
            format!("{},{}", STEPS[sa].1, STEPS[sb].1),
            &[i1, i2],
        );
    }
    s
}

const AGENTS: [&str; 4] = ["Sumit", "Yann", "Antoine", "Jason"];
/// motivation, destination, object
const MOTIVES: [(&str, &str, &str); 4] = [
    ("hungry", "kitchen", "apple"),
    ("thirsty", "kitchen", "milk"),
    ("tired", "bedroom", "pajamas"),
    ("bored", "garden", "football"),
];

fn agents_motivations(rng: &mut R) -> Story {
    let mut s = Story::default();
    let mut agents = AGENTS.to_vec();
    agents.shuffle(rng);
    let n = rng.random_range(2..=4);
    let mut progress: Vec<(&str, usize, usize, usize)> = agents[..n]
        .iter()
        .map(|&a| (a, rng.random_range(0..4), 0, 0))
        .collect();
    while !progress.is_empty() {
        let i = rng.random_range(0..progress.len());
        let (agent, m, step, state_id) = progress[i];
        let (motive, place, object) = MOTIVES[m];
        let lower = agent.to_lowercase();
        match step {
            0 => {
                let id = s.say(format!("{agent} is {motive}."));
                s.ask(format!("Where will {lower} go?"), place, &[id]);
                progress[i].3 = id;
            }
            1 => {
                s.say(format!("{agent} {} the {place}.", pick(rng, &MOVES)));
                s.ask(
                    format!("Why did {lower} go to the {place}?"),
                    motive,
                    &[state_id],
                );
            }
            _ => {
                s.say(format!("{agent} {} the {object} there.", pick(rng, &GETS)));
                s.ask(
                    format!("Why did {lower} get the {object}?"),
                    motive,
                    &[state_id],
                );
            }
        }
        progress[i].2 += 1;
        if progress[i].2 == 3 {
            progress.remove(i);
        }
    }
    s
}
