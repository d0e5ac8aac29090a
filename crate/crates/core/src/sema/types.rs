//! Semantic types and the shared struct/frame layout rule.
//!
//! Layout: natural alignment, fields in declaration order, struct size
//! rounded up to the largest field alignment. Segment parameters occupy
//! whole words of the shared argument frame, each starting on a word
//! boundary. Code generation and the CPS pass both use these functions.

use std::collections::HashMap;
use std::fmt;

/// Machine word in bytes; also the pointer size and frame granularity.
pub const WORD: u64 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Char,
    Void,
    Pointer(Box<Type>),
    Array(Box<Type>, u64),
    Struct(String),
    Function(FnType),
    /// A code segment. `None` parameters means an unprototyped `()` list,
    /// compatible with any argument list.
    CodeSegment(Option<Vec<Type>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FnType {
    pub params: Option<Vec<Type>>,
    pub ret: Box<Type>,
    pub varargs: bool,
}

impl Type {
    pub fn ptr(t: Type) -> Type {
        Type::Pointer(Box::new(t))
    }

    pub fn code_ptr(params: Option<Vec<Type>>) -> Type {
        Type::ptr(Type::CodeSegment(params))
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Type::Int | Type::Char)
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Type::Pointer(_))
    }

    pub fn is_scalar(&self) -> bool {
        self.is_integer() || self.is_pointer()
    }

    pub fn is_code_ptr(&self) -> bool {
        matches!(self, Type::Pointer(t) if matches!(**t, Type::CodeSegment(_)))
    }

    /// Parameter list of a segment designator or segment pointer.
    pub fn code_params(&self) -> Option<&Option<Vec<Type>>> {
        match self {
            Type::CodeSegment(p) => Some(p),
            Type::Pointer(t) => match &**t {
                Type::CodeSegment(p) => Some(p),
                _ => None,
            },
            _ => None,
        }
    }

    /// Array-to-pointer and designator-to-pointer decay.
    pub fn decay(&self) -> Type {
        match self {
            Type::Array(t, _) => Type::ptr((**t).clone()),
            Type::Function(_) | Type::CodeSegment(_) => Type::ptr(self.clone()),
            t => t.clone(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(ps: &Option<Vec<Type>>) -> String {
            match ps {
                None => String::new(),
                Some(ps) => ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "),
            }
        }
        match self {
            Type::Int => write!(f, "int"),
            Type::Char => write!(f, "char"),
            Type::Void => write!(f, "void"),
            Type::Pointer(t) => write!(f, "{t} *"),
            Type::Array(t, n) => write!(f, "{t}[{n}]"),
            Type::Struct(n) => write!(f, "struct {n}"),
            Type::Function(ft) => write!(f, "{} ({})", ft.ret, list(&ft.params)),
            Type::CodeSegment(ps) => write!(f, "__code ({})", list(ps)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: Type,
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructLayout {
    pub name: String,
    pub fields: Vec<Field>,
    pub size: u64,
    pub align: u64,
}

impl StructLayout {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Completed struct definitions, by tag.
#[derive(Clone, Debug, Default)]
pub struct StructTable {
    layouts: HashMap<String, StructLayout>,
}

impl StructTable {
    pub fn get(&self, name: &str) -> Option<&StructLayout> {
        self.layouts.get(name)
    }

    pub fn is_complete(&self, ty: &Type) -> bool {
        match ty {
            Type::Void | Type::Function(_) | Type::CodeSegment(_) => false,
            Type::Struct(n) => self.layouts.contains_key(n),
            Type::Array(t, _) => self.is_complete(t),
            _ => true,
        }
    }

    /// Lays out `fields` and records the struct. Returns `None` if some
    /// field type is incomplete.
    pub fn define(&mut self, name: &str, fields: &[(String, Type)]) -> Option<&StructLayout> {
        let mut offset = 0;
        let mut align = 1;
        let mut out = Vec::with_capacity(fields.len());
        for (fname, ty) in fields {
            let (size, a) = (self.size_of(ty)?, self.align_of(ty)?);
            offset = round_up(offset, a);
            out.push(Field { name: fname.clone(), ty: ty.clone(), offset });
            offset += size;
            align = align.max(a);
        }
        let layout = StructLayout { name: name.to_string(), fields: out, size: round_up(offset, align), align };
        self.layouts.insert(name.to_string(), layout);
        self.layouts.get(name)
    }

    pub fn size_of(&self, ty: &Type) -> Option<u64> {
        match ty {
            Type::Int => Some(4),
            Type::Char => Some(1),
            Type::Pointer(_) => Some(WORD),
            Type::Array(t, n) => Some(self.size_of(t)? * n),
            Type::Struct(n) => self.layouts.get(n).map(|l| l.size),
            Type::Void | Type::Function(_) | Type::CodeSegment(_) => None,
        }
    }

    pub fn align_of(&self, ty: &Type) -> Option<u64> {
        match ty {
            Type::Int => Some(4),
            Type::Char => Some(1),
            Type::Pointer(_) => Some(WORD),
            Type::Array(t, _) => self.align_of(t),
            Type::Struct(n) => self.layouts.get(n).map(|l| l.align),
            Type::Void | Type::Function(_) | Type::CodeSegment(_) => None,
        }
    }
}

pub fn round_up(n: u64, to: u64) -> u64 {
    n.div_ceil(to) * to
}

/// Placement of one segment parameter in the shared argument frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSlot {
    /// Offset in words from the frame base.
    pub word: u64,
    /// Occupied bytes, a multiple of [`WORD`].
    pub width: u64,
    pub ty: Type,
}

/// Frame placement for a parameter type list. Returns `None` if a type has
/// no size.
pub fn frame_layout(structs: &StructTable, params: &[Type]) -> Option<Vec<FrameSlot>> {
    let mut word = 0;
    params
        .iter()
        .map(|ty| {
            let width = round_up(structs.size_of(ty)?.max(1), WORD);
            let slot = FrameSlot { word, width, ty: ty.clone() };
            word += width / WORD;
            Some(slot)
        })
        .collect()
}

pub fn frame_bytes(slots: &[FrameSlot]) -> u64 {
    slots.iter().map(|s| s.width).sum()
}
