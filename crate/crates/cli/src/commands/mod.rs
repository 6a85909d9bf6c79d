pub mod prevalence;
pub mod renewal;
pub mod surveillance;
pub mod voi;

/// `flag.unwrap_or(config)` for each listed field.
macro_rules! override_fields {
    ($cfg:expr, $args:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $args.$field.clone() {
            $cfg.$field = v.into();
        })+
    };
}
pub(crate) use override_fields;
