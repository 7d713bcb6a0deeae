//! Canonical logical signatures: the byte string two assets must share to be
//! equivalence candidates.

use super::types::{AssetDescriptor, LogicalSignature, Schema, SigType};

fn canon_schema(s: &Schema, out: &mut String) {
    out.push_str("schema(");
    for (i, c) in s.columns.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&c.name);
        out.push(':');
        out.push_str(c.ty.name());
    }
    out.push(')');
}

fn canon_sig_type(t: &SigType, out: &mut String) {
    match t {
        SigType::Schema(s) => canon_schema(s, out),
        SigType::Category(c) => {
            out.push_str("cat:");
            out.push_str(c);
        }
    }
}

/// Deterministic canonical rendering of a signature. Field order in the
/// source document cannot affect it because it is computed from the parsed
/// structure, not the document text.
pub fn canonical_signature(sig: &LogicalSignature) -> String {
    let mut out = String::new();
    out.push_str("goal=");
    out.push_str(&sig.goal);
    out.push_str(";in=");
    for (i, t) in sig.input_types.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        canon_sig_type(t, &mut out);
    }
    out.push_str(";out=");
    canon_sig_type(&sig.output_type, &mut out);
    out
}

/// Canonical signature bytes for a descriptor.
pub fn logical_signature(d: &AssetDescriptor) -> Vec<u8> {
    canonical_signature(&d.signature).into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::test_fixtures::regressor;

    #[test]
    fn equivalent_regressors_share_signature() {
        // A linear-regression and a neural-net regressor over the same I/O
        // schemas must be equivalence candidates.
        let linreg = regressor("linreg", 4200.0);
        let neural = regressor("neural-net", 3100.0);
        assert_eq!(logical_signature(&linreg), logical_signature(&neural));
    }

    #[test]
    fn goal_difference_changes_signature() {
        let reg = regressor("linreg", 4200.0);
        let mut cls = regressor("classifier", 4200.0);
        cls.signature.goal = "classification".to_string();
        assert_ne!(logical_signature(&reg), logical_signature(&cls));
    }

    #[test]
    fn canonical_form_is_readable() {
        let d = regressor("linreg", 4200.0);
        let s = canonical_signature(&d.signature);
        assert_eq!(s, "goal=regression;in=cat:feature-table;out=cat:price-predictor");
    }
}
