//! Name normalization rules used across the derivation passes.
//!
//! All derived identifiers (attribute names, relationship names, role names,
//! service names) flow through this module so the conventions live in one
//! place.

/// Attribute name derived from a message field name.
///
/// Words are lowercased and joined with underscores. Alphabetic all-caps
/// tokens of two to four letters (acronyms such as `VAT`) are kept verbatim.
pub fn attribute_name(field_name: &str) -> String {
    field_name
        .split_whitespace()
        .map(|w| {
            let is_acronym =
                (2..=4).contains(&w.len()) && w.chars().all(|c| c.is_ascii_uppercase());
            if is_acronym {
                w.to_string()
            } else {
                w.to_ascii_lowercase()
            }
        })
        .collect::<Vec<_>>()
        .join("_")
}

/// `ClientOrder` -> `client_order`.
pub fn camel_to_snake(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// `ClientOrder` -> `Order`; single-segment names are returned whole.
pub fn last_camel_segment(name: &str) -> &str {
    match name.char_indices().rev().find(|(i, c)| *i > 0 && c.is_ascii_uppercase()) {
        Some((i, _)) => &name[i..],
        None => name,
    }
}

/// `ClientOrder` -> `clientorder`. Used for class-derived role names.
pub fn lower_compact(name: &str) -> String {
    name.to_ascii_lowercase()
}

/// Naive pluralization: append `s`.
pub fn pluralize(role: &str) -> String {
    format!("{role}s")
}

/// `SALE1` -> `Sale1`. Used as the event prefix of service names.
pub fn titlecase_event_id(id: &str) -> String {
    let mut chars = id.chars();
    match chars.next() {
        Some(first) => {
            format!("{}{}", first.to_ascii_uppercase(), chars.as_str().to_ascii_lowercase())
        }
        None => String::new(),
    }
}

/// Natural sort key for event ids: alphabetic prefix, numeric suffix value,
/// then the raw id as a tiebreak. `SALE2` sorts before `SALE10`.
pub fn event_id_sort_key(id: &str) -> (String, u64, String) {
    let split = id.len() - id.chars().rev().take_while(|c| c.is_ascii_digit()).count();
    let (alpha, digits) = id.split_at(split);
    let num = digits.parse::<u64>().unwrap_or(0);
    (alpha.to_ascii_uppercase(), num, id.to_string())
}

/// Surrogate identifier attribute name for a class: `Line` -> `line_id`.
pub fn surrogate_id_name(class_name: &str) -> String {
    format!("{}_id", camel_to_snake(class_name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribute_names_lowercase_with_acronyms_preserved() {
        assert_eq!(attribute_name("Supplier code"), "supplier_code");
        assert_eq!(attribute_name("VAT number"), "VAT_number");
        assert_eq!(attribute_name("Person in charge"), "person_in_charge");
        assert_eq!(attribute_name("Shipping timestamp"), "shipping_timestamp");
        assert_eq!(attribute_name("Telephone"), "telephone");
    }

    #[test]
    fn camel_to_snake_splits_segments() {
        assert_eq!(camel_to_snake("ClientOrder"), "client_order");
        assert_eq!(camel_to_snake("InsurancePolicy"), "insurance_policy");
        assert_eq!(camel_to_snake("Client"), "client");
    }

    #[test]
    fn last_segment_and_compact_roles() {
        assert_eq!(last_camel_segment("ClientOrder"), "Order");
        assert_eq!(last_camel_segment("ClientAddress"), "Address");
        assert_eq!(last_camel_segment("Line"), "Line");
        assert_eq!(lower_compact("ClientOrder"), "clientorder");
        assert_eq!(pluralize("clientorder"), "clientorders");
    }

    #[test]
    fn event_prefixes_and_natural_order() {
        assert_eq!(titlecase_event_id("SALE1"), "Sale1");
        assert_eq!(titlecase_event_id("LOGI10"), "Logi10");
        assert!(event_id_sort_key("SALE2") < event_id_sort_key("SALE10"));
        assert!(event_id_sort_key("CLIE1") < event_id_sort_key("SALE1"));
    }

    #[test]
    fn surrogate_names() {
        assert_eq!(surrogate_id_name("Line"), "line_id");
        assert_eq!(surrogate_id_name("ClientAddress"), "client_address_id");
    }
}
