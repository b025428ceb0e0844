//! Token feature templates.

use crate::corpus::Instance;
use crate::textproc::URL_TOKEN;

/// Coarse orthographic class of a surface form.
pub fn word_shape(raw: &str) -> &'static str {
    let mut chars = raw.chars();
    let Some(first) = chars.next() else {
        return "mixed";
    };
    if raw.chars().all(|c| c.is_ascii_digit()) {
        return "dd";
    }
    if !raw.chars().all(char::is_alphabetic) {
        return "mixed";
    }
    let rest_lower = chars.clone().all(char::is_lowercase);
    let rest_upper = chars.all(char::is_uppercase);
    match (first.is_uppercase(), rest_lower, rest_upper) {
        (true, _, true) if raw.chars().count() > 1 => "XX",
        (true, true, _) => "Xx",
        (false, true, _) => "xx",
        _ => "mixed",
    }
}

fn affix_features(out: &mut Vec<String>, norm: &str) {
    let chars: Vec<char> = norm.chars().collect();
    for k in 1..=3.min(chars.len()) {
        out.push(format!("pre{k}={}", chars[..k].iter().collect::<String>()));
        out.push(format!("suf{k}={}", chars[chars.len() - k..].iter().collect::<String>()));
    }
}

/// Feature names active at position `i`. Context features are omitted (not
/// padded) at sequence edges.
pub fn extract_features(inst: &Instance, i: usize) -> Vec<String> {
    let raw = &inst.raw_tokens()[i];
    let norm = inst.norm_tokens();
    let w0 = &norm[i];
    let mut out = Vec::with_capacity(16);
    out.push("bias".to_string());
    out.push(format!("w0={w0}"));
    if i > 0 {
        out.push(format!("w-1={}", norm[i - 1]));
    }
    if let Some(next) = norm.get(i + 1) {
        out.push(format!("w+1={next}"));
    }
    out.push(format!("shape={}", word_shape(raw)));
    affix_features(&mut out, w0);
    if raw.chars().next().is_some_and(char::is_uppercase) {
        out.push("cap=1".to_string());
    }
    if w0 == URL_TOKEN {
        out.push("is_url=1".to_string());
    } else if w0.len() > 1 && w0.starts_with('@') {
        out.push("is_mention=1".to_string());
    } else if w0.len() > 1 && w0.starts_with('#') {
        out.push("is_hashtag=1".to_string());
    }
    if i == 0 {
        out.push("start=1".to_string());
    }
    out
}
