//! Shared fixtures for unit tests.

/// Rotated-loop encoding of the nested-loops-with-one-if worked example;
/// the loop conditions are the back-edge sources, so the only eligible
/// branch start is the `if` guarding the inner add.
///
/// Expected semantic slots after averaging:
/// new (1, 0, 0) · list_add (2, 1.5, 0.5) · add (4, 1.5, 0.25) ·
/// cmp (3, 5/3, 0) · store (3, 1/3, 0) · println (1, 0, 0).
pub(crate) fn example_loops_src() -> &'static str {
    "vocab {\n new\n list_add\n add\n cmp\n store\n println\n}\n\
     entry main\n\
     method main {\n\
       new\n\
       store\n\
       store\n\
     outer: add\n\
       list_add\n\
       store\n\
     inner: if cmp skip\n\
       add\n\
       list_add\n\
     skip: add\n\
       if cmp inner\n\
       add\n\
       if cmp outer\n\
       println\n\
       ret\n\
     }\n"
}
