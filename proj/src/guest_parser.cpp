#include "guest_ast.h"

#include "tiervm/guest_lang.h"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <unordered_set>

namespace tiervm::guest {

namespace {

enum class T : uint8_t { Eof, Name, Number, String, Sym };

struct Token {
    T type = T::Eof;
    std::string text;
    double num = 0;
    int line = 1;
    int column = 1;
};

const std::unordered_set<std::string>& Keywords()
{
    static const std::unordered_set<std::string> kw = {
        "and", "break", "do", "else", "elseif", "end", "false", "for", "function", "goto", "if", "in",
        "local", "nil", "not", "or", "repeat", "return", "then", "true", "until", "while",
    };
    return kw;
}

bool IsNameStart(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsNameChar(char c) { return IsNameStart(c) || IsDigit(c); }

class Lexer {
public:
    explicit Lexer(std::string_view src) : m_src(src) { }

    Token Next()
    {
        SkipSpaceAndComments();
        Token t;
        t.line = m_line;
        t.column = Column(m_pos);
        if (m_pos >= m_src.size())
            return t;
        char c = m_src[m_pos];
        if (IsNameStart(c)) {
            size_t start = m_pos;
            while (m_pos < m_src.size() && IsNameChar(m_src[m_pos]))
                m_pos++;
            t.text = std::string(m_src.substr(start, m_pos - start));
            t.type = Keywords().count(t.text) ? T::Sym : T::Name;
            return t;
        }
        if (IsDigit(c) || (c == '.' && m_pos + 1 < m_src.size() && IsDigit(m_src[m_pos + 1])))
            return LexNumber();
        if (c == '"' || c == '\'')
            return LexString(c);
        if (c == '[' && (Peek(1) == '[' || Peek(1) == '=')) {
            size_t save = m_pos;
            int level = 0;
            m_pos++;
            while (Peek(0) == '=') {
                level++;
                m_pos++;
            }
            if (Peek(0) == '[') {
                m_pos++;
                t.type = T::String;
                t.text = LongBracketBody(level);
                return t;
            }
            m_pos = save;
        }
        static const char* const kSyms[] = { "...", "..", "==", "~=", "<=", ">=", "+", "-", "*", "/", "%", "^", "#", "<", ">", "=",
            "(", ")", "{", "}", "[", "]", ";", ":", ",", "." };
        for (const char* s : kSyms) {
            size_t n = std::strlen(s);
            if (m_src.substr(m_pos, n) == s) {
                m_pos += n;
                t.type = T::Sym;
                t.text = s;
                return t;
            }
        }
        throw SourceError(m_line, Column(m_pos), std::string("unexpected character '") + c + "'");
    }

private:
    int Column(size_t pos) const
    {
        size_t nl = pos ? m_src.rfind('\n', pos - 1) : std::string_view::npos;
        return int(pos - (nl == std::string_view::npos ? 0 : nl + 1)) + 1;
    }

    char Peek(size_t k) const { return m_pos + k < m_src.size() ? m_src[m_pos + k] : '\0'; }

    void SkipSpaceAndComments()
    {
        while (m_pos < m_src.size()) {
            char c = m_src[m_pos];
            if (c == '\n') {
                m_line++;
                m_pos++;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                m_pos++;
            } else if (c == '-' && Peek(1) == '-') {
                m_pos += 2;
                if (Peek(0) == '[') {
                    size_t save = m_pos;
                    int level = 0;
                    m_pos++;
                    while (Peek(0) == '=') {
                        level++;
                        m_pos++;
                    }
                    if (Peek(0) == '[') {
                        m_pos++;
                        LongBracketBody(level);
                        continue;
                    }
                    m_pos = save;
                }
                while (m_pos < m_src.size() && m_src[m_pos] != '\n')
                    m_pos++;
            } else {
                break;
            }
        }
    }

    std::string LongBracketBody(int level)
    {
        if (Peek(0) == '\r')
            m_pos++;
        if (Peek(0) == '\n') {
            m_line++;
            m_pos++;
        }
        std::string out;
        int startLine = m_line;
        while (m_pos < m_src.size()) {
            if (m_src[m_pos] == ']') {
                size_t k = 1;
                while (Peek(k) == '=')
                    k++;
                if (int(k) - 1 == level && Peek(k) == ']') {
                    m_pos += k + 1;
                    return out;
                }
            }
            if (m_src[m_pos] == '\n')
                m_line++;
            out += m_src[m_pos++];
        }
        throw SourceError(startLine, "unfinished long string or comment");
    }

    Token LexNumber()
    {
        Token t;
        t.line = m_line;
        t.column = Column(m_pos);
        t.type = T::Number;
        size_t start = m_pos;
        if (Peek(0) == '0' && (Peek(1) == 'x' || Peek(1) == 'X')) {
            m_pos += 2;
            while (m_pos < m_src.size() && (std::isxdigit(static_cast<unsigned char>(m_src[m_pos])) || m_src[m_pos] == '.'
                       || ((m_src[m_pos] == 'p' || m_src[m_pos] == 'P'))
                       || ((m_src[m_pos] == '+' || m_src[m_pos] == '-') && (m_src[m_pos - 1] == 'p' || m_src[m_pos - 1] == 'P'))))
                m_pos++;
        } else {
            while (m_pos < m_src.size() && (IsDigit(m_src[m_pos]) || m_src[m_pos] == '.'
                       || m_src[m_pos] == 'e' || m_src[m_pos] == 'E'
                       || ((m_src[m_pos] == '+' || m_src[m_pos] == '-') && (m_src[m_pos - 1] == 'e' || m_src[m_pos - 1] == 'E'))))
                m_pos++;
        }
        std::string text(m_src.substr(start, m_pos - start));
        if (m_pos < m_src.size() && IsNameStart(m_src[m_pos]))
            throw SourceError(t.line, t.column, "malformed number near '" + text + "'");
        char* end = nullptr;
        t.num = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size())
            throw SourceError(t.line, t.column, "malformed number near '" + text + "'");
        t.text = text;
        return t;
    }

    Token LexString(char quote)
    {
        Token t;
        t.line = m_line;
        t.column = Column(m_pos);
        t.type = T::String;
        m_pos++;
        while (true) {
            if (m_pos >= m_src.size() || m_src[m_pos] == '\n')
                throw SourceError(t.line, t.column, "unfinished string");
            char c = m_src[m_pos++];
            if (c == quote)
                break;
            if (c != '\\') {
                t.text += c;
                continue;
            }
            char e = Peek(0);
            m_pos++;
            switch (e) {
            case 'n': t.text += '\n'; break;
            case 't': t.text += '\t'; break;
            case 'r': t.text += '\r'; break;
            case 'a': t.text += '\a'; break;
            case 'b': t.text += '\b'; break;
            case 'f': t.text += '\f'; break;
            case 'v': t.text += '\v'; break;
            case '\\': t.text += '\\'; break;
            case '"': t.text += '"'; break;
            case '\'': t.text += '\''; break;
            case '\n':
                t.text += '\n';
                m_line++;
                break;
            default:
                if (IsDigit(e)) {
                    int v = e - '0';
                    for (int i = 0; i < 2 && IsDigit(Peek(0)); i++)
                        v = v * 10 + (m_src[m_pos++] - '0');
                    if (v > 255)
                        throw SourceError(m_line, "decimal escape too large");
                    t.text += char(v);
                } else {
                    throw SourceError(m_line, std::string("invalid escape sequence '\\") + e + "'");
                }
            }
        }
        return t;
    }

    std::string_view m_src;
    size_t m_pos = 0;
    int m_line = 1;
};

constexpr uint32_t kMaxLocalSlots = 65535;

struct FuncState {
    FuncAst* f = nullptr;
    FuncState* parent = nullptr;
    std::vector<Block*> blocks;
    uint32_t active = 0;
    int loopDepth = 0;
};

struct BinInfo {
    BinOp op;
    int left;
    int right;
};

class Parser {
public:
    Parser(std::string_view src) : m_lex(src) { Advance(); }

    std::unique_ptr<FuncAst> Chunk(const std::string& name)
    {
        auto f = std::make_unique<FuncAst>();
        f->name = name;
        f->varargs = true;
        f->line = 0;
        FuncState fs;
        fs.f = f.get();
        m_fs = &fs;
        f->body = std::make_unique<Block>();
        OpenScope(*f->body);
        ParseStatements(*f->body);
        CloseScope();
        if (m_tok.type != T::Eof)
            Error("'<eof>' expected near '" + m_tok.text + "'");
        m_fs = nullptr;
        return f;
    }

private:
    [[noreturn]] void Error(const std::string& msg) { throw SourceError(m_tok.line, m_tok.column, msg); }

    void Advance() { m_tok = m_lex.Next(); }
    bool Check(const char* sym) const { return m_tok.type == T::Sym && m_tok.text == sym; }
    bool Accept(const char* sym)
    {
        if (!Check(sym))
            return false;
        Advance();
        return true;
    }
    void Expect(const char* sym)
    {
        if (!Accept(sym))
            Error(std::string("'") + sym + "' expected near '" + Describe() + "'");
    }
    void ExpectMatch(const char* sym, const char* opener, int line)
    {
        if (Accept(sym))
            return;
        if (line == m_tok.line)
            Expect(sym);
        Error(std::string("'") + sym + "' expected (to close '" + opener + "' at line " + std::to_string(line) + ") near '" + Describe() + "'");
    }
    std::string Describe() const { return m_tok.type == T::Eof ? "<eof>" : m_tok.text; }
    std::string ExpectName()
    {
        if (m_tok.type != T::Name)
            Error("<name> expected near '" + Describe() + "'");
        std::string n = m_tok.text;
        Advance();
        return n;
    }

    // ---- Scopes and name resolution ----

    void OpenScope(Block& b)
    {
        b.baseSlot = m_fs->active;
        m_fs->blocks.push_back(&b);
    }

    void CloseScope()
    {
        Block* b = m_fs->blocks.back();
        m_fs->active -= uint32_t(b->locals.size());
        m_fs->blocks.pop_back();
    }

    uint32_t Reserve(uint32_t n)
    {
        uint32_t s = m_fs->active;
        if (uint64_t(s) + n > kMaxLocalSlots)
            Error("too many local variables");
        m_fs->active += n;
        return s;
    }

    LocalDecl* Declare(const std::string& name)
    {
        auto d = std::make_unique<LocalDecl>();
        d->name = name;
        d->slot = Reserve(1);
        LocalDecl* p = d.get();
        m_fs->f->declStore.push_back(std::move(d));
        m_fs->blocks.back()->locals.push_back(p);
        return p;
    }

    static LocalDecl* FindLocal(FuncState& fs, const std::string& name)
    {
        for (auto b = fs.blocks.rbegin(); b != fs.blocks.rend(); ++b) {
            for (auto d = (*b)->locals.rbegin(); d != (*b)->locals.rend(); ++d) {
                if ((*d)->name == name)
                    return *d;
            }
        }
        return nullptr;
    }

    static int AddUpvalue(FuncState& fs, const std::string& name, bool fromLocal, uint32_t index, LocalDecl* decl)
    {
        auto& ups = fs.f->upvalues;
        for (size_t i = 0; i < ups.size(); i++) {
            if (ups[i].fromParentLocal == fromLocal && ups[i].index == index)
                return int(i);
        }
        ups.push_back({ name, fromLocal, index, decl });
        return int(ups.size() - 1);
    }

    static int ResolveUpvalue(FuncState& fs, const std::string& name)
    {
        if (!fs.parent)
            return -1;
        if (LocalDecl* d = FindLocal(*fs.parent, name)) {
            d->captured = true;
            return AddUpvalue(fs, name, true, d->slot, d);
        }
        int pi = ResolveUpvalue(*fs.parent, name);
        if (pi < 0)
            return -1;
        return AddUpvalue(fs, name, false, uint32_t(pi), fs.parent->f->upvalues[pi].decl);
    }

    VarRef Resolve(const std::string& name)
    {
        VarRef v;
        v.name = name;
        if (LocalDecl* d = FindLocal(*m_fs, name)) {
            v.kind = VarRef::Kind::Local;
            v.decl = d;
            return v;
        }
        int up = ResolveUpvalue(*m_fs, name);
        if (up >= 0) {
            v.kind = VarRef::Kind::Upvalue;
            v.upvalue = uint32_t(up);
            v.decl = m_fs->f->upvalues[up].decl;
            return v;
        }
        v.kind = VarRef::Kind::Global;
        return v;
    }

    static void MarkAssigned(Expr& target)
    {
        if (target.k == Expr::K::Var && target.var.decl)
            target.var.decl->assigned = true;
    }

    // ---- Statements ----

    bool BlockFollows() const
    {
        if (m_tok.type == T::Eof)
            return true;
        return Check("end") || Check("else") || Check("elseif") || Check("until");
    }

    void ParseStatements(Block& b)
    {
        while (!BlockFollows()) {
            if (Check("return")) {
                b.stmts.push_back(ParseReturn());
                return;
            }
            if (StmtPtr s = ParseStatement())
                b.stmts.push_back(std::move(s));
        }
    }

    std::unique_ptr<Block> ParseScopedBlock()
    {
        auto b = std::make_unique<Block>();
        OpenScope(*b);
        ParseStatements(*b);
        CloseScope();
        return b;
    }

    StmtPtr NewStmt(Stmt::K k, int line)
    {
        auto s = std::make_unique<Stmt>();
        s->k = k;
        s->line = line;
        return s;
    }

    StmtPtr ParseReturn()
    {
        auto s = NewStmt(Stmt::K::Return, m_tok.line);
        Advance();
        if (!BlockFollows() && !Check(";"))
            s->exprs = ParseExprList();
        Accept(";");
        if (!BlockFollows())
            Error("'end' expected near '" + Describe() + "'");
        return s;
    }

    StmtPtr ParseStatement()
    {
        int line = m_tok.line;
        if (Accept(";"))
            return nullptr;
        if (Check("if"))
            return ParseIf();
        if (Accept("while")) {
            auto s = NewStmt(Stmt::K::While, line);
            s->cond = ParseExpr();
            Expect("do");
            m_fs->loopDepth++;
            s->body = ParseScopedBlock();
            m_fs->loopDepth--;
            ExpectMatch("end", "while", line);
            return s;
        }
        if (Accept("do")) {
            auto s = NewStmt(Stmt::K::Do, line);
            s->body = ParseScopedBlock();
            ExpectMatch("end", "do", line);
            return s;
        }
        if (Accept("for"))
            return ParseFor(line);
        if (Accept("repeat")) {
            auto s = NewStmt(Stmt::K::Repeat, line);
            s->body = std::make_unique<Block>();
            OpenScope(*s->body);
            m_fs->loopDepth++;
            ParseStatements(*s->body);
            m_fs->loopDepth--;
            ExpectMatch("until", "repeat", line);
            s->cond = ParseExpr();
            CloseScope();
            return s;
        }
        if (Accept("function"))
            return ParseFunctionStat(line);
        if (Accept("local")) {
            if (Accept("function")) {
                auto s = NewStmt(Stmt::K::LocalFunction, line);
                std::string name = ExpectName();
                LocalDecl* d = Declare(name);
                d->isLocalFunction = true;
                s->decls.push_back(d);
                auto e = std::make_unique<Expr>();
                e->k = Expr::K::Function;
                e->line = line;
                e->func = ParseFuncBody(name, false, line);
                s->exprs.push_back(std::move(e));
                return s;
            }
            auto s = NewStmt(Stmt::K::Local, line);
            std::vector<std::string> names { ExpectName() };
            while (Accept(","))
                names.push_back(ExpectName());
            if (Accept("="))
                s->exprs = ParseExprList();
            for (const std::string& n : names)
                s->decls.push_back(Declare(n));
            return s;
        }
        if (Accept("break")) {
            if (m_fs->loopDepth == 0)
                throw SourceError(line, "break outside a loop");
            return NewStmt(Stmt::K::Break, line);
        }
        if (Check("goto"))
            Error("goto is not supported");
        return ParseExprStat(line);
    }

    StmtPtr ParseIf()
    {
        int line = m_tok.line;
        auto s = NewStmt(Stmt::K::If, line);
        Advance();
        do {
            IfClause c;
            c.cond = ParseExpr();
            Expect("then");
            c.body = ParseScopedBlock();
            s->clauses.push_back(std::move(c));
        } while (Accept("elseif"));
        if (Accept("else"))
            s->elseBody = ParseScopedBlock();
        ExpectMatch("end", "if", line);
        return s;
    }

    StmtPtr ParseFor(int line)
    {
        std::string var = ExpectName();
        if (Check(",") || Check("in"))
            Error("generic for is not supported");
        Expect("=");
        auto s = NewStmt(Stmt::K::NumFor, line);
        s->exprs.push_back(ParseExpr());
        Expect(",");
        s->exprs.push_back(ParseExpr());
        if (Accept(","))
            s->exprs.push_back(ParseExpr());
        Expect("do");
        s->forBase = Reserve(3);
        s->body = std::make_unique<Block>();
        OpenScope(*s->body);
        s->decls.push_back(Declare(var));
        m_fs->loopDepth++;
        ParseStatements(*s->body);
        m_fs->loopDepth--;
        CloseScope();
        m_fs->active -= 3;
        ExpectMatch("end", "for", line);
        return s;
    }

    StmtPtr ParseFunctionStat(int line)
    {
        std::string first = ExpectName();
        std::string fullName = first;
        auto target = std::make_unique<Expr>();
        target->k = Expr::K::Var;
        target->line = line;
        target->var = Resolve(first);
        bool method = false;
        bool field = false;
        while (Check(".") || Check(":")) {
            bool colon = Check(":");
            Advance();
            std::string key = ExpectName();
            fullName += (colon ? ":" : ".") + key;
            auto idx = std::make_unique<Expr>();
            idx->k = Expr::K::Index;
            idx->line = line;
            idx->a = std::move(target);
            idx->b = StringExpr(key, line);
            target = std::move(idx);
            field = true;
            if (colon) {
                method = true;
                break;
            }
        }
        if (!field)
            MarkAssigned(*target);
        auto s = NewStmt(Stmt::K::Assign, line);
        s->targets.push_back(std::move(target));
        auto e = std::make_unique<Expr>();
        e->k = Expr::K::Function;
        e->line = line;
        e->func = ParseFuncBody(fullName, method, line);
        s->exprs.push_back(std::move(e));
        return s;
    }

    StmtPtr ParseExprStat(int line)
    {
        ExprPtr first = ParseSuffixedExpr();
        if (Check("=") || Check(",")) {
            auto s = NewStmt(Stmt::K::Assign, line);
            s->targets.push_back(std::move(first));
            while (Accept(","))
                s->targets.push_back(ParseSuffixedExpr());
            Expect("=");
            s->exprs = ParseExprList();
            for (ExprPtr& t : s->targets) {
                if (t->k != Expr::K::Var && t->k != Expr::K::Index)
                    throw SourceError(line, "syntax error: cannot assign to this expression");
                MarkAssigned(*t);
            }
            return s;
        }
        if (first->k != Expr::K::Call && first->k != Expr::K::Method)
            Error("syntax error near '" + Describe() + "'");
        auto s = NewStmt(Stmt::K::Call, line);
        s->exprs.push_back(std::move(first));
        return s;
    }

    std::unique_ptr<FuncAst> ParseFuncBody(const std::string& name, bool method, int line)
    {
        auto f = std::make_unique<FuncAst>();
        f->name = name;
        f->line = line;
        FuncState fs;
        fs.f = f.get();
        fs.parent = m_fs;
        m_fs = &fs;
        f->body = std::make_unique<Block>();
        OpenScope(*f->body);
        if (method)
            f->params.push_back(Declare("self"));
        Expect("(");
        if (!Check(")")) {
            do {
                if (Accept("...")) {
                    f->varargs = true;
                    break;
                }
                f->params.push_back(Declare(ExpectName()));
            } while (Accept(","));
        }
        Expect(")");
        ParseStatements(*f->body);
        ExpectMatch("end", "function", line);
        CloseScope();
        m_fs = fs.parent;
        return f;
    }

    // ---- Expressions ----

    static ExprPtr StringExpr(const std::string& s, int line)
    {
        auto e = std::make_unique<Expr>();
        e->k = Expr::K::String;
        e->str = s;
        e->line = line;
        return e;
    }

    std::vector<ExprPtr> ParseExprList()
    {
        std::vector<ExprPtr> v;
        v.push_back(ParseExpr());
        while (Accept(","))
            v.push_back(ParseExpr());
        return v;
    }

    std::optional<BinInfo> CurrentBinOp() const
    {
        if (m_tok.type != T::Sym)
            return std::nullopt;
        const std::string& t = m_tok.text;
        if (t == "or") return BinInfo { BinOp::Add, 1, 1 };
        if (t == "and") return BinInfo { BinOp::Add, 2, 2 };
        if (t == "<") return BinInfo { BinOp::Lt, 3, 3 };
        if (t == ">") return BinInfo { BinOp::Gt, 3, 3 };
        if (t == "<=") return BinInfo { BinOp::Le, 3, 3 };
        if (t == ">=") return BinInfo { BinOp::Ge, 3, 3 };
        if (t == "==") return BinInfo { BinOp::Eq, 3, 3 };
        if (t == "~=") return BinInfo { BinOp::Ne, 3, 3 };
        if (t == "..") return BinInfo { BinOp::Concat, 9, 8 };
        if (t == "+") return BinInfo { BinOp::Add, 10, 10 };
        if (t == "-") return BinInfo { BinOp::Sub, 10, 10 };
        if (t == "*") return BinInfo { BinOp::Mul, 11, 11 };
        if (t == "/") return BinInfo { BinOp::Div, 11, 11 };
        if (t == "%") return BinInfo { BinOp::Mod, 11, 11 };
        if (t == "^") return BinInfo { BinOp::Add, 14, 13 };
        return std::nullopt;
    }

    static constexpr int kUnaryPriority = 12;

    ExprPtr ParseExpr(int limit = 0)
    {
        ExprPtr e;
        int line = m_tok.line;
        if (Check("not") || Check("-") || Check("#")) {
            std::string op = m_tok.text;
            Advance();
            ExprPtr operand = ParseExpr(kUnaryPriority);
            if (op == "-" && operand->k == Expr::K::Number) {
                operand->num = -operand->num;
                e = std::move(operand);
            } else {
                e = std::make_unique<Expr>();
                e->k = Expr::K::Unary;
                e->line = line;
                e->uop = op == "not" ? UnOp::Not : op == "-" ? UnOp::Neg : UnOp::Len;
                e->a = std::move(operand);
            }
        } else {
            e = ParseSimpleExpr();
        }
        while (auto bin = CurrentBinOp()) {
            if (bin->left <= limit)
                break;
            std::string text = m_tok.text;
            int opLine = m_tok.line;
            if (text == "^")
                Error("operator '^' is not supported");
            Advance();
            ExprPtr rhs = ParseExpr(bin->right);
            auto n = std::make_unique<Expr>();
            n->line = opLine;
            if (text == "and")
                n->k = Expr::K::And;
            else if (text == "or")
                n->k = Expr::K::Or;
            else {
                n->k = Expr::K::Binary;
                n->op = bin->op;
            }
            n->a = std::move(e);
            n->b = std::move(rhs);
            e = std::move(n);
        }
        return e;
    }

    ExprPtr ParseSimpleExpr()
    {
        auto e = std::make_unique<Expr>();
        e->line = m_tok.line;
        if (m_tok.type == T::Number) {
            e->k = Expr::K::Number;
            e->num = m_tok.num;
            Advance();
            return e;
        }
        if (m_tok.type == T::String) {
            e->k = Expr::K::String;
            e->str = m_tok.text;
            Advance();
            return e;
        }
        if (Accept("nil")) {
            e->k = Expr::K::Nil;
            return e;
        }
        if (Accept("true")) {
            e->k = Expr::K::True;
            return e;
        }
        if (Accept("false")) {
            e->k = Expr::K::False;
            return e;
        }
        if (Check("...")) {
            if (!m_fs->f->varargs)
                Error("cannot use '...' outside a vararg function");
            Advance();
            e->k = Expr::K::VarArg;
            return e;
        }
        if (Check("{"))
            return ParseTable();
        if (Accept("function")) {
            e->k = Expr::K::Function;
            e->func = ParseFuncBody("anonymous", false, e->line);
            return e;
        }
        return ParseSuffixedExpr();
    }

    ExprPtr ParsePrimaryExpr()
    {
        int line = m_tok.line;
        if (m_tok.type == T::Name) {
            auto e = std::make_unique<Expr>();
            e->k = Expr::K::Var;
            e->line = line;
            e->var = Resolve(m_tok.text);
            Advance();
            return e;
        }
        if (Accept("(")) {
            ExprPtr inner = ParseExpr();
            ExpectMatch(")", "(", line);
            if (!inner->IsMulti() && inner->k != Expr::K::Var && inner->k != Expr::K::Index)
                return inner;
            auto e = std::make_unique<Expr>();
            e->k = Expr::K::Paren;
            e->line = line;
            e->a = std::move(inner);
            return e;
        }
        Error("unexpected symbol near '" + Describe() + "'");
    }

    ExprPtr ParseSuffixedExpr()
    {
        ExprPtr e = ParsePrimaryExpr();
        while (true) {
            int line = m_tok.line;
            if (Accept(".")) {
                auto n = std::make_unique<Expr>();
                n->k = Expr::K::Index;
                n->line = line;
                n->a = std::move(e);
                n->b = StringExpr(ExpectName(), line);
                e = std::move(n);
            } else if (Accept("[")) {
                auto n = std::make_unique<Expr>();
                n->k = Expr::K::Index;
                n->line = line;
                n->a = std::move(e);
                n->b = ParseExpr();
                Expect("]");
                e = std::move(n);
            } else if (Accept(":")) {
                auto n = std::make_unique<Expr>();
                n->k = Expr::K::Method;
                n->line = line;
                n->a = std::move(e);
                n->str = ExpectName();
                n->args = ParseCallArgs();
                e = std::move(n);
            } else if (Check("(") || Check("{") || m_tok.type == T::String) {
                auto n = std::make_unique<Expr>();
                n->k = Expr::K::Call;
                n->line = line;
                n->a = std::move(e);
                n->args = ParseCallArgs();
                e = std::move(n);
            } else {
                return e;
            }
        }
    }

    std::vector<ExprPtr> ParseCallArgs()
    {
        std::vector<ExprPtr> args;
        if (m_tok.type == T::String) {
            args.push_back(StringExpr(m_tok.text, m_tok.line));
            Advance();
            return args;
        }
        if (Check("{")) {
            args.push_back(ParseTable());
            return args;
        }
        int line = m_tok.line;
        Expect("(");
        if (!Check(")"))
            args = ParseExprList();
        ExpectMatch(")", "(", line);
        return args;
    }

    ExprPtr ParseTable()
    {
        int line = m_tok.line;
        Expect("{");
        auto e = std::make_unique<Expr>();
        e->k = Expr::K::Table;
        e->line = line;
        while (!Check("}")) {
            TableItem item;
            if (Accept("[")) {
                item.key = ParseExpr();
                Expect("]");
                Expect("=");
            } else if (m_tok.type == T::Name) {
                Token save = m_tok;
                Lexer lexSave = m_lex;
                Advance();
                if (Accept("=")) {
                    item.key = StringExpr(save.text, save.line);
                } else {
                    m_tok = save;
                    m_lex = lexSave;
                }
            }
            item.value = ParseExpr();
            e->items.push_back(std::move(item));
            if (!Accept(",") && !Accept(";"))
                break;
        }
        ExpectMatch("}", "{", line);
        return e;
    }

    Lexer m_lex;
    Token m_tok;
    FuncState* m_fs = nullptr;
};

} // namespace

std::unique_ptr<FuncAst> ParseChunk(std::string_view source, const std::string& chunkName)
{
    Parser p(source);
    return p.Chunk(chunkName);
}

} // namespace tiervm::guest
