//! Alignment method names as they appear in report columns.

use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Orig,
    Spec(usize),
    Ot,
    Pca(usize),
}

impl Method {
    /// Accepts ORIG, OT, SPEC60, PCA20 (any case). `spec`/`pca` without a
    /// trailing number take the dimension from `k_flag`.
    pub fn parse(s: &str, k_flag: Option<usize>) -> Result<Method> {
        let upper = s.to_ascii_uppercase();
        let (name, digits) = match upper.find(|c: char| c.is_ascii_digit()) {
            Some(pos) => upper.split_at(pos),
            None => (upper.as_str(), ""),
        };
        let embedded = if digits.is_empty() {
            None
        } else {
            Some(digits.parse::<usize>().map_err(|_| anyhow!("bad method '{s}'"))?)
        };
        let k = || {
            embedded
                .or(k_flag)
                .ok_or_else(|| anyhow!("method '{s}' needs a dimension: append one or pass --k"))
        };
        let method = match name {
            "ORIG" if embedded.is_none() => Method::Orig,
            "OT" if embedded.is_none() => Method::Ot,
            "SPEC" => Method::Spec(k()?),
            "PCA" => Method::Pca(k()?),
            _ => bail!("unknown method '{s}', expected ORIG, SPEC{{k}}, OT, or PCA{{k}}"),
        };
        if let (Some(a), Some(b)) = (embedded, k_flag) {
            if a != b {
                bail!("method '{s}' conflicts with --k {b}");
            }
        }
        Ok(method)
    }

    pub fn label(&self) -> String {
        match self {
            Method::Orig => "ORIG".into(),
            Method::Ot => "OT".into(),
            Method::Spec(k) => format!("SPEC{k}"),
            Method::Pca(k) => format!("PCA{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_style_names() {
        assert_eq!(Method::parse("ORIG", None).unwrap(), Method::Orig);
        assert_eq!(Method::parse("ot", None).unwrap(), Method::Ot);
        assert_eq!(Method::parse("SPEC60", None).unwrap(), Method::Spec(60));
        assert_eq!(Method::parse("pca20", None).unwrap(), Method::Pca(20));
    }

    #[test]
    fn flag_supplies_or_confirms_the_dimension() {
        assert_eq!(Method::parse("spec", Some(120)).unwrap(), Method::Spec(120));
        assert_eq!(Method::parse("SPEC60", Some(60)).unwrap(), Method::Spec(60));
        assert!(Method::parse("SPEC60", Some(61)).is_err());
        assert!(Method::parse("spec", None).is_err());
    }

    #[test]
    fn rejects_unknown_and_malformed_names() {
        assert!(Method::parse("UMAP", None).is_err());
        assert!(Method::parse("ORIG5", None).is_err());
        assert!(Method::parse("OT3", None).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for m in [Method::Orig, Method::Ot, Method::Spec(60), Method::Pca(20)] {
            assert_eq!(Method::parse(&m.label(), None).unwrap(), m);
        }
    }
}
