//! Seeded random JSON generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const KEYS: [&str; 8] = ["id", "name", "tags", "size", "items", "meta", "on", "x y"];
const WORDS: [&str; 8] = ["", "a", "abc", "hello world", "ü", "12345678", "foo-bar", "Zz"];

pub fn scalar(rng: &mut ChaCha8Rng) -> Value {
    match rng.random_range(0..6) {
        0 => Value::Null,
        1 => Value::Bool(rng.random()),
        2 => json!(rng.random_range(-50i64..50)),
        3 => serde_json::from_str(&format!("{}.{}", rng.random_range(-9..9), rng.random_range(1..99))).unwrap(),
        _ => json!(WORDS.choose(rng).unwrap()),
    }
}

/// Random JSON value whose nesting is at most `depth`.
pub fn value(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    if depth == 0 {
        return scalar(rng);
    }
    match rng.random_range(0..5) {
        0 | 1 => scalar(rng),
        2 => (0..rng.random_range(0..4)).map(|_| value(rng, depth - 1)).collect(),
        _ => object(rng, depth),
    }
}

pub fn object(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    let mut map = Map::new();
    for _ in 0..rng.random_range(0..4) {
        let key = KEYS.choose(rng).unwrap().to_string();
        let v = if depth == 0 { scalar(rng) } else { value(rng, depth - 1) };
        map.insert(key, v);
    }
    Value::Object(map)
}

/// Up to 20 documents of depth at most 4; at least one.
pub fn collection(rng: &mut ChaCha8Rng) -> Vec<Value> {
    let n = rng.random_range(1..=20);
    (0..n).map(|_| if rng.random_bool(0.8) { object(rng, 3) } else { value(rng, 4) }).collect()
}

fn point(rng: &mut ChaCha8Rng) -> Value {
    let mut p = Map::new();
    p.insert("lat".into(), json!(rng.random_range(-90i64..90)));
    p.insert("lon".into(), json!(rng.random_range(-180i64..180)));
    if rng.random_bool(0.5) {
        p.insert("label".into(), json!(WORDS.choose(rng).unwrap()));
    }
    Value::Object(p)
}

/// Documents in which one object shape recurs under several keys, so
/// hoisting has something to share.
pub fn repeated_shape_collection(rng: &mut ChaCha8Rng) -> Vec<Value> {
    let n = rng.random_range(2..=8);
    (0..n)
        .map(|_| {
            let mut doc = Map::new();
            doc.insert("start".into(), point(rng));
            doc.insert("end".into(), point(rng));
            let stops: Vec<Value> = (0..rng.random_range(0..3)).map(|_| point(rng)).collect();
            doc.insert("stops".into(), Value::Array(stops));
            if rng.random_bool(0.5) {
                doc.insert("extra".into(), object(rng, 1));
            }
            Value::Object(doc)
        })
        .collect()
}

/// Nearby variants of `doc`: a replaced, removed or added member somewhere.
pub fn mutate(rng: &mut ChaCha8Rng, doc: &Value) -> Value {
    match doc {
        Value::Object(map) if !map.is_empty() && rng.random_bool(0.7) => {
            let mut map = map.clone();
            let key = map.keys().nth(rng.random_range(0..map.len())).unwrap().clone();
            match rng.random_range(0..3) {
                0 => {
                    map.remove(&key);
                }
                1 => {
                    let inner = mutate(rng, &map[&key]);
                    map.insert(key, inner);
                }
                _ => {
                    map.insert(KEYS.choose(rng).unwrap().to_string(), value(rng, 1));
                }
            }
            Value::Object(map)
        }
        Value::Array(items) if !items.is_empty() && rng.random_bool(0.7) => {
            let mut items = items.clone();
            let i = rng.random_range(0..items.len());
            if rng.random_bool(0.5) {
                items[i] = mutate(rng, &items[i]);
            } else {
                items.push(items[i].clone());
            }
            Value::Array(items)
        }
        _ => value(rng, 2),
    }
}
