#include "tower/value.hpp"

#include <cctype>
#include <stdexcept>

namespace tower {

Value Value::uint(Word v) {
    Value r;
    r.kind = ValueKind::UInt;
    r.n = v;
    return r;
}

Value Value::boolean(bool b) {
    Value r;
    r.kind = ValueKind::Bool;
    r.n = b ? 1 : 0;
    return r;
}

Value Value::null(Type pointee) {
    Value r;
    r.kind = ValueKind::Null;
    r.pointee = std::move(pointee);
    return r;
}

Value Value::addr(Type pointee, Word p) {
    if (p == 0) return null(std::move(pointee));
    Value r;
    r.kind = ValueKind::Addr;
    r.n = p;
    r.pointee = std::move(pointee);
    return r;
}

Value Value::make_pair(Value a, Value b) {
    Value r;
    r.kind = ValueKind::Pair;
    r.pair = std::make_shared<const std::pair<Value, Value>>(std::move(a), std::move(b));
    return r;
}

bool operator==(const Value& a, const Value& b) {
    if (a.is_ptr() && b.is_ptr()) return a.n == b.n;
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case ValueKind::Unit: return true;
    case ValueKind::Pair: return a.first() == b.first() && a.second() == b.second();
    default: return a.n == b.n;
    }
}

Value default_value(const Type& t) {
    Type h = head(t);
    if (!h) return Value::unit();
    switch (h->kind) {
    case TypeKind::UInt: return Value::uint(0);
    case TypeKind::Bool: return Value::boolean(false);
    case TypeKind::Ptr: return Value::null(h->a);
    case TypeKind::Pair: return Value::make_pair(default_value(h->a), default_value(h->b));
    default: return Value::unit();
    }
}

Type value_type(const Value& v) {
    switch (v.kind) {
    case ValueKind::Unit: return unit_type();
    case ValueKind::UInt: return uint_type();
    case ValueKind::Bool: return bool_type();
    case ValueKind::Pair: return pair_type(value_type(v.first()), value_type(v.second()));
    case ValueKind::Null:
    case ValueKind::Addr: return ptr_type(v.pointee ? v.pointee : fresh_meta());
    }
    return unit_type();
}

void flatten(const Value& v, std::vector<Word>& out) {
    switch (v.kind) {
    case ValueKind::Unit: break;
    case ValueKind::Pair:
        flatten(v.first(), out);
        flatten(v.second(), out);
        break;
    case ValueKind::Null: out.push_back(0); break;
    default: out.push_back(v.n); break;
    }
}

std::vector<Word> flatten(const Value& v) {
    std::vector<Word> out;
    flatten(v, out);
    return out;
}

Value unflatten(const Type& t, const std::vector<Word>& words, std::size_t* pos) {
    Type h = head(t);
    auto next = [&]() -> Word { return *pos < words.size() ? words[(*pos)++] : 0; };
    if (!h) return Value::unit();
    switch (h->kind) {
    case TypeKind::UInt: return Value::uint(next());
    case TypeKind::Bool: return Value::boolean(next() & 1);
    case TypeKind::Ptr: return Value::addr(h->a, next());
    case TypeKind::Pair: {
        Value a = unflatten(h->a, words, pos);
        Value b = unflatten(h->b, words, pos);
        return Value::make_pair(std::move(a), std::move(b));
    }
    default: return Value::unit();
    }
}

Value unflatten(const Type& t, const std::vector<Word>& words) {
    std::size_t pos = 0;
    return unflatten(t, words, &pos);
}

bool is_zero(const Value& v) {
    for (Word w : flatten(v))
        if (w != 0) return false;
    return true;
}

std::string to_string(const Value& v) {
    switch (v.kind) {
    case ValueKind::Unit: return "()";
    case ValueKind::UInt: return std::to_string(v.n);
    case ValueKind::Bool: return v.n ? "true" : "false";
    case ValueKind::Pair: return "(" + to_string(v.first()) + ", " + to_string(v.second()) + ")";
    case ValueKind::Null: return "null";
    case ValueKind::Addr: return "ptr:" + std::to_string(v.n);
    }
    return "?";
}

namespace {

struct ValueParser {
    const std::string& s;
    std::size_t i = 0;

    void ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(const std::string& tok) {
        ws();
        if (s.compare(i, tok.size(), tok) == 0) {
            i += tok.size();
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("bad value '" + s + "': " + what + " at offset " + std::to_string(i));
    }
    Word number() {
        ws();
        std::size_t start = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (start == i) fail("expected number");
        unsigned long long v = std::stoull(s.substr(start, i - start));
        if (v > 0xffffffffull) fail("number too large");
        return static_cast<Word>(v);
    }
    Value value() {
        ws();
        if (eat("(")) {
            if (eat(")")) return Value::unit();
            Value a = value();
            if (!eat(",")) fail("expected ','");
            Value b = value();
            if (!eat(")")) fail("expected ')'");
            return Value::make_pair(std::move(a), std::move(b));
        }
        if (eat("true")) return Value::boolean(true);
        if (eat("false")) return Value::boolean(false);
        if (eat("null")) return Value::null(nullptr);
        if (eat("ptr:")) return Value::addr(nullptr, number());
        return Value::uint(number());
    }
};

} // namespace

Value parse_value(const std::string& text) {
    ValueParser p{text};
    Value v = p.value();
    p.ws();
    if (p.i != text.size()) p.fail("trailing input");
    return v;
}

Value coerce(const Value& v, const Type& t) {
    Type h = head(t);
    auto mismatch = [&]() {
        throw std::invalid_argument("value " + to_string(v) + " does not have type " + to_string(t));
    };
    if (!h) mismatch();
    switch (h->kind) {
    case TypeKind::Unit:
        if (v.kind != ValueKind::Unit) mismatch();
        return v;
    case TypeKind::UInt:
        if (v.kind != ValueKind::UInt) mismatch();
        return v;
    case TypeKind::Bool:
        if (v.kind != ValueKind::Bool) mismatch();
        return v;
    case TypeKind::Ptr:
        if (!v.is_ptr()) mismatch();
        return Value::addr(h->a, v.n);
    case TypeKind::Pair:
        if (v.kind != ValueKind::Pair) mismatch();
        return Value::make_pair(coerce(v.first(), h->a), coerce(v.second(), h->b));
    default: mismatch();
    }
    return v;
}

} // namespace tower
