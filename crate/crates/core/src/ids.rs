//! Dense indices for users, items, contexts and recommendation units, and
//! the interner mapping external string ids onto them.

use std::collections::HashMap;
use std::fmt;

macro_rules! dense_index {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_index!(
    /// Interned user.
    UserIdx
);
dense_index!(
    /// Interned item (a photo, a print provider, ...).
    ItemIdx
);
dense_index!(
    /// Interned geographic context.
    ContextIdx
);
dense_index!(
    /// A recommendation unit: either a raw item or a DBSCAN cluster.
    UnitIdx
);
dense_index!(
    /// A DBSCAN cluster. Noise is represented by absence, never by an id.
    ClusterId
);
dense_index!(
    /// A node of the geographic partonomy.
    NodeIdx
);

/// Bijection between external string identifiers and dense indices,
/// assigned in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.lookup.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn resolve(&self, i: u32) -> &str {
        &self.names[i as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}
