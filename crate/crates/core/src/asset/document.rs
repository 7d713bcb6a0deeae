//! The descriptor exchange format: a UTF-8 JSON document with snake_case
//! keys, money as integer micro-units and regions as two-letter codes.
//! Serialization is stable, so `parse ∘ serialize` is the identity on valid
//! descriptors and a second serialization is byte-identical.

use super::types::AssetDescriptor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },
}

/// Parses one descriptor document.
pub fn parse_descriptor(doc: &[u8]) -> Result<AssetDescriptor, DocumentError> {
    let value: serde_json::Value = serde_json::from_slice(doc).map_err(|e| DocumentError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let de = value.clone();
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // serde reports missing fields on the parent path; pull the field
        // name out of the message so the error names the absent field.
        let field = if path == "." || path.is_empty() {
            inner
                .split('`')
                .nth(1)
                .map(|s| s.to_string())
                .unwrap_or_else(|| path.clone())
        } else {
            path
        };
        DocumentError::Schema { field, message: inner }
    })
}

/// Serializes a descriptor to the stable document form.
pub fn serialize_descriptor(d: &AssetDescriptor) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(d).expect("descriptors always serialize");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::test_fixtures::pipeline_descriptor;

    #[test]
    fn round_trip_preserves_pipeline_descriptors() {
        let d = pipeline_descriptor();
        let bytes = serialize_descriptor(&d);
        let back = parse_descriptor(&bytes).unwrap();
        assert_eq!(back, d);
        // Second serialization is byte-stable.
        assert_eq!(serialize_descriptor(&back), bytes);
    }

    #[test]
    fn missing_id_is_a_schema_error() {
        let doc = br#"{"kind": "algorithm", "name": "x"}"#;
        match parse_descriptor(doc) {
            Err(DocumentError::Schema { field, .. }) => assert_eq!(field, "id"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let doc = b"{\n  \"id\": ";
        match parse_descriptor(doc) {
            Err(DocumentError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(pipeline_descriptor()).unwrap();
        v.as_object_mut().unwrap().insert("surprise".into(), serde_json::json!(1));
        let doc = serde_json::to_vec(&v).unwrap();
        assert!(matches!(parse_descriptor(&doc), Err(DocumentError::Schema { .. })));
    }
}
