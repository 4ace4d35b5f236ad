#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tower/types.hpp"

namespace tower {

enum class ValueKind { Unit, UInt, Bool, Pair, Null, Addr };

using Word = std::uint32_t;

struct Value {
    ValueKind kind = ValueKind::Unit;
    Word n = 0;           // UInt payload, Bool (0/1), Addr address
    Type pointee;         // Null / Addr
    std::shared_ptr<const std::pair<Value, Value>> pair;

    static Value unit() { return {}; }
    static Value uint(Word v);
    static Value boolean(bool b);
    static Value null(Type pointee);
    static Value addr(Type pointee, Word p);
    static Value make_pair(Value a, Value b);

    const Value& first() const { return pair->first; }
    const Value& second() const { return pair->second; }
    bool is_ptr() const { return kind == ValueKind::Null || kind == ValueKind::Addr; }
};

// Bit-level equality; pointee annotations are ignored.
bool operator==(const Value& a, const Value& b);
inline bool operator!=(const Value& a, const Value& b) { return !(a == b); }

Value default_value(const Type& t);
Type value_type(const Value& v);

// Flattened machine words, left to right.
void flatten(const Value& v, std::vector<Word>& out);
std::vector<Word> flatten(const Value& v);
// Rebuilds a value of type t from words starting at *pos.
Value unflatten(const Type& t, const std::vector<Word>& words, std::size_t* pos);
Value unflatten(const Type& t, const std::vector<Word>& words);

bool is_zero(const Value& v);

std::string to_string(const Value& v);

// Parses the textual notation: (), integers, true/false, (v1, v2), null, ptr:N.
// Throws std::invalid_argument on malformed input.
Value parse_value(const std::string& text);

// Re-annotates a parsed value against a type (fills pointee types).
// Throws std::invalid_argument on a shape mismatch.
Value coerce(const Value& v, const Type& t);

} // namespace tower
