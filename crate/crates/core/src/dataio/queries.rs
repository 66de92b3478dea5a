use std::collections::HashMap;
use std::path::Path;

use super::{check_id, read_file, text_lines, write_file};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Queries in file order with an id index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuerySet {
    queries: Vec<Query>,
    index: HashMap<String, usize>,
}

impl QuerySet {
    /// Fails on the first repeated id; the reported line is the 1-based position.
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let mut set = QuerySet::default();
        for (i, q) in queries.into_iter().enumerate() {
            set.push(q, i + 1)?;
        }
        Ok(set)
    }

    fn push(&mut self, query: Query, line: usize) -> Result<()> {
        check_id(&query.id, line)?;
        if self.index.contains_key(&query.id) {
            return Err(Error::DuplicateId { id: query.id, line });
        }
        self.index.insert(query.id.clone(), self.queries.len());
        self.queries.push(query);
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut set = QuerySet::default();
        for line in text_lines(bytes) {
            let (line_no, line) = line?;
            let (id, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected `id<TAB>text`"))?;
            set.push(Query::new(id, text), line_no)?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Query> {
        self.queries.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.queries.iter().map(|q| q.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Query> {
        self.index.get(id).map(|&i| &self.queries[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            out.push_str(&q.id);
            out.push('\t');
            out.push_str(&q.text);
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a QuerySet {
    type Item = &'a Query;
    type IntoIter = std::slice::Iter<'a, Query>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// Reads an `id<TAB>text` file.
pub fn parse_queries(path: impl AsRef<Path>) -> Result<QuerySet> {
    let path = path.as_ref();
    QuerySet::from_bytes(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_queries(set: &QuerySet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), set.to_tsv().as_bytes())
}
