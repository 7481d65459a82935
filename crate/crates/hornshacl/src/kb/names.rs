use std::fmt;
use std::sync::Arc;

macro_rules! symbol {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(text: impl AsRef<str>) -> Self {
                Self(Arc::from(text.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:?})", stringify!($name), &*self.0)
            }
        }

        impl From<&str> for $name {
            fn from(text: &str) -> Self {
                Self::new(text)
            }
        }
    };
}

symbol!(
    /// A concept name. `⊤` and `⊥` are never concept names.
    Concept
);
symbol!(
    /// A role name; direction is carried by [`crate::kb::Role`].
    RoleName
);
symbol!(
    /// A named individual. Anonymous elements live in interpretations only.
    Individual
);
symbol!(
    /// A unary (or, in the binary extension, binary) shape name.
    ShapeName
);
