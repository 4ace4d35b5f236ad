#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/ast.hpp"
#include "tower/boson.hpp"
#include "tower/transform.hpp"

namespace tower {

class CompileError : public std::runtime_error {
public:
    CompileError(SourcePos pos, const std::string& msg) : std::runtime_error(msg), pos(pos) {}
    SourcePos pos;
};

class AncillaViolation : public std::runtime_error {
public:
    AncillaViolation(const std::string& reg, std::uint64_t value)
        : std::runtime_error("register '" + reg + "' is " + std::to_string(value) + ", expected 0"), reg(reg),
          value(value) {}
    std::string reg;
    std::uint64_t value;
};

class NetlistParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RegRole { Program, Ancilla, Memory, Internal };
const char* role_name(RegRole r);

struct RegInfo {
    std::string name;
    int width = 8;
    RegRole role = RegRole::Ancilla;
};

struct MemSection {
    std::string name;  // M0, M1, ...
    Word base = 1;
    int count = 0;
    int block_words = 1;
};

enum class MacroKind {
    XorConst, Copy, Not, AndInto, OrInto, Test, Arith, SwapReg, QramSwap, Control, Fresh, Retire,
};

// Level 1: word-level macros. Every macro except SwapReg/QramSwap computes
// dst ^= f(a, b), so each is its own inverse.
struct L1Op {
    MacroKind kind = MacroKind::Copy;
    BinOp op = BinOp::Add;          // Arith: Add Sub Mul, comparisons, bitwise, shifts
    std::vector<int> dst;           // register ids (one per word)
    std::vector<int> a, b;
    std::vector<Word> consts;       // XorConst, per dst word
    int section = -1;               // QramSwap: a[0] is the address, dst the data words
    int ctrl = -1;                  // Control: condition register (bit 0)
    std::vector<L1Op> body;         // Control
    SourcePos pos;
};

// Level 2: bit-level primitives with arbitrary control lists.
struct Bit {
    int reg = 0;
    int bit = 0;
    bool operator==(const Bit& o) const { return reg == o.reg && bit == o.bit; }
};

struct Gate {
    enum class Kind { X, Swap, Qram, Assert0 } kind = Kind::X;
    std::vector<Bit> controls;
    Bit t1, t2;                 // X: t1; Swap: t1 <-> t2
    int addr = -1;              // Qram address register
    std::vector<int> data;      // Qram data registers
    int section = -1;
    int reg = -1;               // Assert0
};

struct Netlist {
    int k = 8;
    int level = 1;
    std::vector<RegInfo> regs;
    std::map<std::string, int> index;
    std::vector<MemSection> mem;
    std::vector<L1Op> ops;
    std::vector<Gate> gates;

    // Source-level view: variable -> word registers, variable types, hp registers.
    std::map<std::string, std::vector<int>> var_regs;
    std::map<std::string, Type> var_types;
    std::vector<int> hp;

    int reg(const std::string& name) const;
    int add_reg(const std::string& name, int width, RegRole role);
};

// Kernel statement to level 1 netlist. `inputs` are the free variables of s with their types.
Netlist compile(const StmtPtr& s, const std::vector<Param>& inputs, const HeapConfig& heap, int k);
Netlist compile(const Lowered& low, const HeapConfig& heap, int k);

// Level 1 -> level 2. The result keeps the register table and adds internal
// scratch registers.
Netlist expand(const Netlist& l1);

// Sequence of gates/ops in reverse order (each element is self-inverse).
Netlist adjoint(const Netlist& n);

struct CircuitState {
    std::vector<Word> regs;                       // indexed by register id
    std::vector<std::vector<Word>> mem;           // per section: count * block_words words

    Word& block_word(const Netlist& n, int section, Word addr, int w);
};

CircuitState zero_state(const Netlist& n);
// Applies the netlist at its level. Throws AncillaViolation on a failed
// zero assertion.
void simulate(const Netlist& n, CircuitState& st);

// Basis encoding of an interpreter state: registers of the listed variables,
// memory sections and hp registers from the heap.
CircuitState encode_state(const Netlist& n, const std::map<std::string, Value>& R, const HeapState& heap);
// Registers of variables not in `R` must be zero for the states to match.
bool state_matches(const Netlist& n, const CircuitState& st, const std::map<std::string, Value>& R,
                   const HeapState& heap, std::string* why = nullptr);

struct CostReport {
    std::uint64_t gates = 0;        // L1 macros excluding copies, swaps and annotations
    std::uint64_t qubits = 0;       // peak live program + ancilla words times k
    std::uint64_t l1_ops = 0;
    std::uint64_t l2_gates = 0;     // filled when a level 2 netlist is supplied
    std::map<std::string, std::uint64_t> by_macro;
};

CostReport cost_report(const Netlist& l1);

std::string to_text(const Netlist& n);
Netlist parse_netlist(const std::string& text);

// "name=value" assignments; "M0[3]=a,b" sets block words.
void apply_init(const Netlist& n, CircuitState& st, const std::string& spec);
std::string state_text(const Netlist& n, const CircuitState& st);

const char* macro_name(const L1Op& op);

} // namespace tower
