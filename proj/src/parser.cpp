#include <cctype>
#include <map>

#include "tower/syntax.hpp"

namespace tower {

static std::string where(SourcePos pos, const std::string& msg) {
    return std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + msg;
}

ParseError::ParseError(SourcePos p, const std::string& msg)
    : std::runtime_error(where(p, msg)), pos(p), message(msg) {}

DesugarError::DesugarError(SourcePos p, const std::string& msg)
    : std::runtime_error(where(p, msg)), pos(p), message(msg) {}

namespace {

enum class Tok { Ident, Int, Punct, Eof };

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    unsigned long long value = 0;
    SourcePos pos;
};

bool reserved_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#' || c == '/' ||
           c == '@' || c == '\'' || c == '~';
}

std::vector<Token> lex(const std::string& src, const ParseOptions& opts) {
    static const char* puncts[] = {"<->", "<-", "->", "<<", ">>", "<=", ">=", "==", "!=", "&&",
                                   "||", "(",  ")",  "{",  "}",  "[",  "]",  "<",  ">",  ",",
                                   ";",  ":",  ".",  "*",  "+",  "-",  "&",  "|",  "^",  "!",
                                   "="};
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            SourcePos start{line, col};
            std::size_t end = src.find("*/", i + 2);
            if (end == std::string::npos) throw ParseError(start, "unterminated comment");
            advance(end + 2 - i);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.pos = {line, col};
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isalnum(static_cast<unsigned char>(src[j]))) ++j;
            std::string text = src.substr(i, j - i);
            if (text.size() > 1 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
                throw ParseError(t.pos, "hexadecimal literals are not supported");
            for (char d : text)
                if (!std::isdigit(static_cast<unsigned char>(d)))
                    throw ParseError(t.pos, "malformed number '" + text + "'");
            if (text.size() > 10 || std::stoull(text) > 0xffffffffull)
                throw ParseError(t.pos, "number literal too large");
            t.kind = Tok::Int;
            t.text = text;
            t.value = std::stoull(text);
            advance(j - i);
            out.push_back(t);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.kind = Tok::Ident;
            t.text = src.substr(i, j - i);
            advance(j - i);
            out.push_back(t);
            continue;
        }
        if (c == kReservedPrefix) {
            if (!opts.allow_reserved)
                throw ParseError(t.pos, "identifiers may not start with '$'");
            std::size_t j = i + 1;
            while (j < src.size() && reserved_char(src[j])) ++j;
            t.kind = Tok::Ident;
            t.text = src.substr(i, j - i);
            advance(j - i);
            out.push_back(t);
            continue;
        }
        bool matched = false;
        for (const char* p : puncts) {
            std::string ps(p);
            if (src.compare(i, ps.size(), ps) == 0) {
                t.kind = Tok::Punct;
                t.text = ps;
                advance(ps.size());
                out.push_back(t);
                matched = true;
                break;
            }
        }
        if (!matched) throw ParseError(t.pos, std::string("unexpected character '") + c + "'");
    }
    Token eof;
    eof.kind = Tok::Eof;
    eof.pos = {line, col};
    out.push_back(eof);
    return out;
}

const std::map<std::string, int>& keywords() {
    static const std::map<std::string, int> k = {
        {"fun", 1},  {"type", 1},  {"let", 1},   {"if", 1},    {"else", 1},
        {"with", 1}, {"do", 1},    {"return", 1}, {"true", 1}, {"false", 1},
        {"null", 1}, {"alloc", 1}, {"default", 1}, {"not", 1}, {"test", 1},
        {"uint", 1}, {"bool", 1},  {"ptr", 1},   {"mu", 1},    {"skip", 1},
    };
    return k;
}

class Parser {
public:
    Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)) {
        prog_.file = std::move(file);
    }

    Type lone_type() {
        Type t = type();
        if (!at_eof()) fail("unexpected text after type");
        return t;
    }

    SurfaceProgram program() {
        while (!at_eof()) {
            if (is_kw("type")) {
                type_decl();
            } else if (is_kw("fun")) {
                prog_.funs.push_back(fun_decl());
            } else {
                fail("expected 'fun' or 'type'");
            }
        }
        return std::move(prog_);
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;
    SurfaceProgram prog_;
    std::map<std::string, Type> aliases_;
    std::vector<std::string> tyvars_;

    const Token& peek(std::size_t k = 0) const {
        return toks_[std::min(i_ + k, toks_.size() - 1)];
    }
    bool at_eof() const { return peek().kind == Tok::Eof; }
    bool is_punct(const char* p, std::size_t k = 0) const {
        return peek(k).kind == Tok::Punct && peek(k).text == p;
    }
    bool is_kw(const char* w, std::size_t k = 0) const {
        return peek(k).kind == Tok::Ident && peek(k).text == w;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        std::string got = t.kind == Tok::Eof ? "end of input" : "'" + t.text + "'";
        throw ParseError(t.pos, msg + ", found " + got);
    }
    void expect(const char* p) {
        if (!is_punct(p)) fail(std::string("expected '") + p + "'");
        ++i_;
    }
    bool accept(const char* p) {
        if (is_punct(p)) {
            ++i_;
            return true;
        }
        return false;
    }
    void expect_kw(const char* w) {
        if (!is_kw(w)) fail(std::string("expected '") + w + "'");
        ++i_;
    }
    // Closes a type argument list; splits a '>>' token.
    void expect_close_angle() {
        if (is_punct(">>")) {
            toks_[i_].text = ">";
            toks_[i_].pos.col += 1;
            return;
        }
        expect(">");
    }
    std::string ident(const char* what) {
        const Token& t = peek();
        if (t.kind != Tok::Ident || keywords().count(t.text))
            fail(std::string("expected ") + what);
        ++i_;
        return t.text;
    }

    // ---- types ----
    Type type() {
        const Token& t = peek();
        if (is_kw("uint")) {
            ++i_;
            return uint_type();
        }
        if (is_kw("bool")) {
            ++i_;
            return bool_type();
        }
        if (is_kw("ptr")) {
            ++i_;
            expect("<");
            Type inner = type();
            expect_close_angle();
            return ptr_type(inner);
        }
        if (is_kw("mu")) {
            ++i_;
            std::string v = ident("type variable");
            expect(".");
            tyvars_.push_back(v);
            Type body = type();
            tyvars_.pop_back();
            return ind_type(v, body);
        }
        if (accept("(")) {
            if (accept(")")) return unit_type();
            Type a = type();
            if (accept(")")) return a;
            expect(",");
            Type b = type();
            expect(")");
            return pair_type(a, b);
        }
        if (t.kind == Tok::Ident && t.text == "_") {
            ++i_;
            return fresh_meta();
        }
        if (t.kind == Tok::Ident && !keywords().count(t.text)) {
            ++i_;
            for (auto it = tyvars_.rbegin(); it != tyvars_.rend(); ++it)
                if (*it == t.text) return var_type(t.text);
            auto a = aliases_.find(t.text);
            if (a != aliases_.end()) return a->second;
            return var_type(t.text);
        }
        fail("expected a type");
    }

    void type_decl() {
        SourcePos pos = peek().pos;
        expect_kw("type");
        std::string name = ident("type name");
        expect("=");
        tyvars_.push_back(name);
        Type body = type();
        tyvars_.pop_back();
        expect(";");
        Type t = free_type_vars(body).count(name) ? ind_type(name, body, true) : body;
        aliases_[name] = t;
        prog_.types.push_back({name, t, pos});
    }

    SFun fun_decl() {
        SFun f;
        f.pos = peek().pos;
        expect_kw("fun");
        f.name = ident("function name");
        if (accept("[")) {
            f.bound_var = ident("bound variable");
            expect("]");
        }
        expect("(");
        if (!is_punct(")")) {
            do {
                Param p;
                p.name = ident("parameter name");
                expect(":");
                p.ty = type();
                f.params.push_back(p);
            } while (accept(","));
        }
        expect(")");
        f.ret = unit_type();
        if (accept("->")) f.ret = type();
        f.body = block();
        return f;
    }

    // ---- statements ----
    SBlock block() {
        expect("{");
        SBlock out;
        while (!is_punct("}")) {
            if (at_eof()) fail("expected '}'");
            out.push_back(stmt());
        }
        expect("}");
        return out;
    }

    SStmtPtr stmt() {
        auto s = std::make_shared<SStmt>();
        s->pos = peek().pos;
        if (is_kw("let")) {
            ++i_;
            s->kind = SStmtKind::Let;
            s->pat = pattern();
            if (accept("<-")) {
                s->forward = true;
            } else if (accept("->")) {
                s->forward = false;
            } else {
                fail("expected '<-' or '->'");
            }
            s->e = expr();
            expect(";");
            return s;
        }
        if (is_kw("skip")) {
            ++i_;
            expect(";");
            s->kind = SStmtKind::Skip;
            return s;
        }
        if (is_kw("if")) return if_stmt();
        if (is_kw("with")) return with_stmt();
        if (is_kw("return")) {
            ++i_;
            s->kind = SStmtKind::Return;
            s->e = expr();
            expect(";");
            return s;
        }
        if (accept("*")) {
            s->kind = SStmtKind::MemSwap;
            s->x = ident("pointer variable");
            expect("<->");
            s->y = ident("variable");
            expect(";");
            return s;
        }
        if (peek().kind == Tok::Ident && !keywords().count(peek().text) && is_punct("<->", 1)) {
            std::string a = ident("variable");
            expect("<->");
            if (accept("*")) {
                s->kind = SStmtKind::MemSwap;
                s->x = ident("pointer variable");
                s->y = a;
            } else {
                s->kind = SStmtKind::Swap;
                s->x = a;
                s->y = ident("variable");
            }
            expect(";");
            return s;
        }
        fail("expected a statement");
    }

    // Body after `else` / `do`: a block, an if, or a with.
    SBlock continuation() {
        if (is_kw("if")) return {if_stmt()};
        if (is_kw("with")) return {with_stmt()};
        return block();
    }

    SStmtPtr if_stmt() {
        auto s = std::make_shared<SStmt>();
        s->pos = peek().pos;
        expect_kw("if");
        s->kind = SStmtKind::If;
        s->e = expr();
        s->body = block();
        if (is_kw("else")) {
            ++i_;
            s->other = continuation();
        }
        return s;
    }

    SStmtPtr with_stmt() {
        auto s = std::make_shared<SStmt>();
        s->pos = peek().pos;
        expect_kw("with");
        s->kind = SStmtKind::With;
        s->body = block();
        expect_kw("do");
        s->other = continuation();
        return s;
    }

    SPatPtr pattern() {
        auto p = std::make_shared<SPat>();
        p->pos = peek().pos;
        if (accept("(")) {
            if (accept(")")) {
                p->kind = SPatKind::Lit;
                p->lit = leaf(SExprKind::Unit, p->pos);
                return p;
            }
            auto a = pattern();
            if (accept(")")) return a;
            expect(",");
            p->kind = SPatKind::Pair;
            p->a = a;
            p->b = pattern();
            expect(")");
            return p;
        }
        if (peek().kind == Tok::Int) {
            p->kind = SPatKind::Lit;
            p->lit = leaf(SExprKind::Int, p->pos, peek().value);
            ++i_;
            return p;
        }
        if (is_kw("true") || is_kw("false")) {
            p->kind = SPatKind::Lit;
            p->lit = leaf(SExprKind::Bool, p->pos, is_kw("true") ? 1 : 0);
            ++i_;
            return p;
        }
        if (is_kw("null")) {
            ++i_;
            p->kind = SPatKind::Lit;
            p->lit = leaf(SExprKind::Null, p->pos);
            return p;
        }
        p->kind = SPatKind::Var;
        p->name = ident("pattern");
        return p;
    }

    // ---- expressions ----
    static SExprPtr leaf(SExprKind k, SourcePos pos, unsigned long long n = 0) {
        auto e = std::make_shared<SExpr>();
        e->kind = k;
        e->pos = pos;
        e->n = n;
        return e;
    }
    static SExprPtr binary(BinOp op, SExprPtr a, SExprPtr b, SourcePos pos) {
        auto e = std::make_shared<SExpr>();
        e->kind = SExprKind::Binop;
        e->bop = op;
        e->kids = {std::move(a), std::move(b)};
        e->pos = pos;
        return e;
    }

    SExprPtr expr() {
        if (is_punct(";") || is_punct(")") || is_punct(","))
            fail("expected an expression");
        return binary_level(0);
    }

    SExprPtr binary_level(int level) {
        static const std::vector<std::vector<std::pair<const char*, BinOp>>> table = {
            {{"||", BinOp::Or}},
            {{"&&", BinOp::And}},
            {{"|", BinOp::BitOr}},
            {{"^", BinOp::BitXor}},
            {{"&", BinOp::BitAnd}},
            {{"==", BinOp::Eq}, {"!=", BinOp::Ne}},
            {{"<=", BinOp::Le}, {">=", BinOp::Ge}, {"<", BinOp::Lt}, {">", BinOp::Gt}},
            {{"<<", BinOp::Shl}, {">>", BinOp::Shr}},
            {{"+", BinOp::Add}, {"-", BinOp::Sub}},
            {{"*", BinOp::Mul}},
        };
        if (level == static_cast<int>(table.size())) return unary();
        SExprPtr lhs = binary_level(level + 1);
        for (;;) {
            bool found = false;
            for (const auto& [text, op] : table[level]) {
                if (is_punct(text)) {
                    SourcePos pos = peek().pos;
                    ++i_;
                    SExprPtr rhs = binary_level(level + 1);
                    lhs = binary(op, lhs, rhs, pos);
                    found = true;
                    break;
                }
            }
            if (!found) return lhs;
        }
    }

    SExprPtr unary() {
        SourcePos pos = peek().pos;
        if (is_kw("not") || is_punct("!") || is_kw("test")) {
            bool test = is_kw("test");
            ++i_;
            auto e = std::make_shared<SExpr>();
            e->kind = SExprKind::Unop;
            e->uop = test ? UnOp::Test : UnOp::Not;
            e->pos = pos;
            e->kids = {unary()};
            return e;
        }
        return postfix();
    }

    SExprPtr postfix() {
        SExprPtr e = primary();
        while (is_punct(".")) {
            SourcePos pos = peek().pos;
            ++i_;
            if (peek().kind != Tok::Int || (peek().value != 1 && peek().value != 2))
                fail("expected projection index 1 or 2");
            auto p = std::make_shared<SExpr>();
            p->kind = SExprKind::Proj;
            p->index = static_cast<int>(peek().value);
            p->pos = pos;
            p->kids = {e};
            ++i_;
            e = p;
        }
        return e;
    }

    Bound bound() {
        Bound b;
        if (peek().kind == Tok::Int) {
            b.kind = Bound::Kind::Const;
            b.n = static_cast<int>(peek().value);
            ++i_;
            return b;
        }
        b.var = ident("recursion bound");
        b.kind = Bound::Kind::Var;
        if (accept("-")) {
            if (peek().kind != Tok::Int) fail("expected a number in bound");
            b.kind = Bound::Kind::VarMinus;
            b.n = static_cast<int>(peek().value);
            if (b.n < 1) fail("bound decrement must be at least 1");
            ++i_;
        }
        return b;
    }

    SExprPtr primary() {
        const Token& t = peek();
        SourcePos pos = t.pos;
        if (t.kind == Tok::Int) {
            ++i_;
            return leaf(SExprKind::Int, pos, t.value);
        }
        if (is_kw("true") || is_kw("false")) {
            bool v = is_kw("true");
            ++i_;
            return leaf(SExprKind::Bool, pos, v ? 1 : 0);
        }
        if (is_kw("null")) {
            ++i_;
            return leaf(SExprKind::Null, pos);
        }
        if (is_kw("alloc") || is_kw("default")) {
            bool alloc = is_kw("alloc");
            ++i_;
            expect("<");
            auto e = leaf(alloc ? SExprKind::Alloc : SExprKind::Default, pos);
            e->ty = type();
            expect_close_angle();
            return e;
        }
        if (accept("(")) {
            if (accept(")")) return leaf(SExprKind::Unit, pos);
            SExprPtr a = expr();
            if (accept(")")) return a;
            expect(",");
            SExprPtr b = expr();
            expect(")");
            auto e = leaf(SExprKind::Pair, pos);
            e->kids = {a, b};
            return e;
        }
        if (t.kind == Tok::Ident && !keywords().count(t.text)) {
            std::string name = t.text;
            ++i_;
            if (is_punct("[") || is_punct("(")) {
                auto e = leaf(SExprKind::Call, pos);
                e->name = name;
                if (accept("[")) {
                    e->bound = bound();
                    expect("]");
                }
                expect("(");
                if (!is_punct(")")) {
                    do {
                        e->kids.push_back(expr());
                    } while (accept(","));
                }
                expect(")");
                return e;
            }
            auto e = leaf(SExprKind::Var, pos);
            e->name = name;
            return e;
        }
        fail("expected an expression");
    }
};

} // namespace

SurfaceProgram parse(const std::string& source, const std::string& file, ParseOptions opts) {
    Parser p(lex(source, opts), file);
    return p.program();
}

Type parse_type(const std::string& text) {
    Parser p(lex(text, ParseOptions{}), "<type>");
    return p.lone_type();
}

} // namespace tower
