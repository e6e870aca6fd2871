use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Run-wide structural bookkeeping. A `(from, to)` pair always maps to the
/// same innovation number, and splitting the same connection in two genomes
/// yields the same hidden node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationRegistry {
    pub next_innovation: u64,
    #[serde(with = "pairs")]
    pub seen: BTreeMap<(u32, u32), u64>,
    pub next_node_id: u32,
    /// Split connection innovation → hidden node ids created for it, in creation order.
    pub splits: BTreeMap<u64, Vec<u32>>,
}

impl InnovationRegistry {
    pub fn new(first_free_node: u32) -> Self {
        Self {
            next_innovation: 0,
            seen: BTreeMap::new(),
            next_node_id: first_free_node,
            splits: BTreeMap::new(),
        }
    }

    pub fn innovation(&mut self, from: u32, to: u32) -> u64 {
        if let Some(i) = self.seen.get(&(from, to)) {
            return *i;
        }
        let i = self.next_innovation;
        self.next_innovation += 1;
        self.seen.insert((from, to), i);
        i
    }

    pub fn lookup(&self, from: u32, to: u32) -> Option<u64> {
        self.seen.get(&(from, to)).copied()
    }

    /// Node id for splitting connection `innovation` in a genome that already
    /// holds the nodes for which `present` is true.
    pub fn split_node(&mut self, innovation: u64, present: impl Fn(u32) -> bool) -> u32 {
        let ids = self.splits.entry(innovation).or_default();
        if let Some(id) = ids.iter().copied().find(|id| !present(*id)) {
            return id;
        }
        let id = self.next_node_id;
        self.next_node_id += 1;
        ids.push(id);
        id
    }
}

mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(u32, u32), u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(u32, u32, u64)> = map.iter().map(|((a, b), i)| (*a, *b, *i)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u32, u32), u64>, D::Error> {
        let v: Vec<(u32, u32, u64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(a, b, i)| ((a, b), i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_pair_same_number() {
        let mut r = InnovationRegistry::new(10);
        let a = r.innovation(0, 5);
        let b = r.innovation(1, 5);
        assert_eq!(r.innovation(0, 5), a);
        assert!(b > a);
    }

    #[test]
    fn split_reuses_node_unless_present() {
        let mut r = InnovationRegistry::new(10);
        let n1 = r.split_node(3, |_| false);
        assert_eq!(r.split_node(3, |_| false), n1);
        let n2 = r.split_node(3, |id| id == n1);
        assert_ne!(n1, n2);
        assert_eq!(r.next_node_id, 12);
    }

    #[test]
    fn round_trips_through_json() {
        let mut r = InnovationRegistry::new(4);
        r.innovation(0, 3);
        r.split_node(0, |_| false);
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<InnovationRegistry>(&text).unwrap(), r);
    }
}
