use std::fmt;

use crate::table::ColumnType;

/// Static types of the logical-form language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Num,
    Str,
    Date,
    Row,
    Rows,
    /// A column reference, tagged with the column's type.
    Col(ColumnType),
}

impl Type {
    /// The scalar type a cell of the given column type yields.
    pub fn of_column(ty: ColumnType) -> Type {
        match ty {
            ColumnType::Str => Type::Str,
            ColumnType::Num => Type::Num,
            ColumnType::Date => Type::Date,
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, Type::Num | Type::Str | Type::Date)
    }

    pub fn is_ordered(self) -> bool {
        matches!(self, Type::Num | Type::Date)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("Bool"),
            Type::Num => f.write_str("Num"),
            Type::Str => f.write_str("Str"),
            Type::Date => f.write_str("Date"),
            Type::Row => f.write_str("Row"),
            Type::Rows => f.write_str("Rows"),
            Type::Col(c) => write!(f, "Col<{c}>"),
        }
    }
}

macro_rules! catalog {
    ($($variant:ident => $name:literal, $arity:literal;)*) => {
        /// The fixed function catalog.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Function {
            $($variant,)*
        }

        impl Function {
            pub const ALL: &'static [Function] = &[$(Function::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Function::$variant => $name,)*
                }
            }

            pub fn arity(self) -> usize {
                match self {
                    $(Function::$variant => $arity,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Function> {
                match name {
                    $($name => Some(Function::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

catalog! {
    AllRows => "all_rows", 0;
    FilterEq => "filter_eq", 3;
    FilterNe => "filter_ne", 3;
    FilterGreater => "filter_greater", 3;
    FilterLess => "filter_less", 3;
    FilterGe => "filter_ge", 3;
    FilterLe => "filter_le", 3;
    FilterContains => "filter_contains", 3;
    Count => "count", 1;
    Only => "only", 1;
    Max => "max", 2;
    Min => "min", 2;
    Sum => "sum", 2;
    Avg => "avg", 2;
    Argmax => "argmax", 2;
    Argmin => "argmin", 2;
    Hop => "hop", 2;
    Eq => "eq", 2;
    Ne => "ne", 2;
    Greater => "greater", 2;
    Less => "less", 2;
    Diff => "diff", 2;
    Add => "add", 2;
    And => "and", 2;
    Or => "or", 2;
    Not => "not", 1;
    AllEq => "all_eq", 3;
    UniqueCount => "unique_count", 2;
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Function {
    /// Argument order is irrelevant to the result.
    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Function::And | Function::Or | Function::Eq | Function::Ne | Function::Add
        )
    }

    /// Position of the column argument, if the function takes one.
    pub fn column_position(self) -> Option<usize> {
        use Function::*;
        match self {
            FilterEq | FilterNe | FilterGreater | FilterLess | FilterGe | FilterLe
            | FilterContains | Max | Min | Sum | Avg | Argmax | Argmin | Hop | AllEq
            | UniqueCount => Some(1),
            _ => None,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, Function::Diff | Function::Add)
    }

    /// Result type for the given argument types, or a description of the
    /// mismatch.
    pub fn result_type(self, args: &[Type]) -> Result<Type, String> {
        use Function::*;
        use Type::*;
        if args.len() != self.arity() {
            return Err(format!(
                "{} expects {} arguments, got {}",
                self,
                self.arity(),
                args.len()
            ));
        }
        let mismatch = || {
            let shown: Vec<String> = args.iter().map(Type::to_string).collect();
            Err(format!("{} cannot take ({})", self, shown.join(", ")))
        };
        let ok = match (self, args) {
            (AllRows, []) => Rows,
            (FilterEq | FilterNe | AllEq, [Rows, Col(c), v]) if *v == Type::of_column(*c) => {
                if self == AllEq {
                    Bool
                } else {
                    Rows
                }
            }
            (FilterGreater | FilterLess | FilterGe | FilterLe, [Rows, Col(c), v])
                if *c != ColumnType::Str && *v == Type::of_column(*c) =>
            {
                Rows
            }
            (FilterContains, [Rows, Col(_), Str]) => Rows,
            (Count, [Rows]) => Num,
            (Only, [Rows]) => Bool,
            (Max | Min | Sum | Avg, [Rows, Col(ColumnType::Num)]) => Num,
            (Argmax | Argmin, [Rows, Col(c)]) if *c != ColumnType::Str => Row,
            (Hop, [Row | Rows, Col(c)]) => Type::of_column(*c),
            (Eq | Ne, [a, b]) if a == b && a.is_scalar() => Bool,
            (Greater | Less, [a, b]) if a == b && a.is_ordered() => Bool,
            (Diff | Add, [Num, Num]) => Num,
            (And | Or, [Bool, Bool]) => Bool,
            (Not, [Bool]) => Bool,
            (UniqueCount, [Rows, Col(_)]) => Num,
            _ => return mismatch(),
        };
        Ok(ok)
    }
}
