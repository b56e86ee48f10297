#include "diakit/parser.hpp"

#include <cctype>
#include <set>

namespace diakit {

namespace {

enum class Tok { ident, lbrace, rbrace, lparen, rparen, lbracket, rbracket, semi, comma, invalid, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end:
      return "end of input";
    case Tok::invalid:
      return "invalid character";
    case Tok::ident:
      return "'" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

// Splits text into tokens; comments and whitespace are dropped. An
// unterminated block comment is reported as P002 and ends the stream.
class Lexer {
 public:
  Lexer(const SourceFile& file, std::vector<Diagnostic>& diags) : file_(file), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    const std::string& s = file_.text;
    while (pos_ < s.size()) {
      unsigned char c = s[pos_];
      if (c == '\n' || c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        advance();
        continue;
      }
      if (c == '/' && pos_ + 1 < s.size() && s[pos_ + 1] == '/') {
        while (pos_ < s.size() && s[pos_] != '\n') advance();
        continue;
      }
      if (c == '/' && pos_ + 1 < s.size() && s[pos_ + 1] == '*') {
        int line = line_, col = col_;
        advance();
        advance();
        bool closed = false;
        while (pos_ < s.size()) {
          if (s[pos_] == '*' && pos_ + 1 < s.size() && s[pos_ + 1] == '/') {
            advance();
            advance();
            closed = true;
            break;
          }
          advance();
        }
        if (!closed) {
          diags_.push_back({Severity::error, parse_codes::kUnterminatedBlock,
                            "unterminated block comment", {file_.path, line, col}});
          break;
        }
        continue;
      }
      Token t;
      t.line = line_;
      t.column = col_;
      if (ident_start(c)) {
        std::size_t start = pos_;
        while (pos_ < s.size() && ident_char(static_cast<unsigned char>(s[pos_]))) advance();
        t.kind = Tok::ident;
        t.text = s.substr(start, pos_ - start);
        out.push_back(std::move(t));
        continue;
      }
      switch (c) {
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ';': t.kind = Tok::semi; break;
        case ',': t.kind = Tok::comma; break;
        default: t.kind = Tok::invalid; break;
      }
      if (t.kind == Tok::invalid) {
        // One token for a run of unusable bytes.
        std::size_t start = pos_;
        advance();
        while (pos_ < s.size()) {
          unsigned char d = s[pos_];
          if (std::isspace(d) || ident_char(d) || std::string_view("{}()[];,/").find(d) !=
                                                       std::string_view::npos)
            break;
          advance();
        }
        t.text = s.substr(start, pos_ - start);
      } else {
        t.text = std::string(1, static_cast<char>(c));
        advance();
      }
      out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::end;
    end.line = line_;
    end.column = col_;
    out.push_back(end);
    return out;
  }

 private:
  void advance() {
    if (file_.text[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const SourceFile& file_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct Abort {};

class Parser {
 public:
  Parser(const SourceFile& file, std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : file_(file), toks_(std::move(tokens)), diags_(diags) {}

  std::vector<Declaration> run() {
    std::vector<Declaration> decls;
    while (peek().kind != Tok::end) {
      depth_ = 0;
      try {
        decls.push_back(declaration());
      } catch (const Abort&) {
        recover();
      }
    }
    return decls;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    if (t.kind == Tok::lbrace) ++depth_;
    if (t.kind == Tok::rbrace) --depth_;
    return t;
  }
  bool at_keyword(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::ident && t.text == kw;
  }
  Location loc(const Token& t) const { return {file_.path, t.line, t.column}; }

  void report(const char* code, const Token& at, const std::string& message) {
    diags_.push_back({Severity::error, code, message, loc(at)});
  }
  [[noreturn]] void fail(const char* code, const Token& at, const std::string& message) {
    report(code, at, message);
    throw Abort{};
  }
  [[noreturn]] void unexpected(const std::string& wanted) {
    fail(parse_codes::kUnexpectedToken, peek(), "expected " + wanted + ", found " + describe(peek()));
  }

  const Token& expect(Tok kind, const std::string& wanted) {
    if (peek().kind != kind) unexpected(wanted);
    return next();
  }
  std::string identifier(const std::string& wanted = "identifier") {
    return expect(Tok::ident, wanted).text;
  }
  void keyword(std::string_view kw) {
    if (!at_keyword(kw)) unexpected("'" + std::string(kw) + "'");
    next();
  }

  // True when the upcoming tokens open a new top-level declaration.
  bool at_declaration_start() const {
    if (peek().kind != Tok::ident || peek(1).kind != Tok::ident) return false;
    const std::string& kw = peek().text;
    const Token& third = peek(2);
    if (kw == "device")
      return third.kind == Tok::lbrace || (third.kind == Tok::ident && third.text == "extends");
    if (kw == "structure" || kw == "enumeration" || kw == "controller" || kw == "action")
      return third.kind == Tok::lbrace;
    if (kw == "context") return third.kind == Tok::ident && third.text == "as";
    return false;
  }

  // Inside a block: end of input or a new declaration means the block was
  // never closed.
  void check_block_open(const Token& open) {
    if (peek().kind == Tok::end || at_declaration_start()) {
      report(parse_codes::kUnterminatedBlock, open, "unterminated block");
      depth_ = 0;
      throw Abort{};
    }
  }

  void recover() {
    while (peek().kind != Tok::end) {
      if (depth_ <= 0 && at_declaration_start()) break;
      if (peek().kind == Tok::rbrace) {
        next();
        if (depth_ <= 0) {
          depth_ = 0;
          break;
        }
        continue;
      }
      next();
    }
  }

  TypeRef type() {
    TypeRef t;
    t.name = identifier("type name");
    if (peek().kind == Tok::lbracket) {
      next();
      expect(Tok::rbracket, "']'");
      t.array = true;
    }
    return t;
  }

  Param param() {
    Param p;
    p.loc = loc(peek());
    p.name = identifier("parameter name");
    keyword("as");
    p.type = type();
    return p;
  }

  // `indexed by ID as type (, ID as type)*`, positioned on `indexed`.
  std::vector<Param> index_clause(bool single) {
    next();  // indexed
    if (!at_keyword("by"))
      fail(parse_codes::kMalformedIndex, peek(), "expected 'by' after 'indexed', found " + describe(peek()));
    next();
    std::vector<Param> out;
    for (;;) {
      Param p;
      p.loc = loc(peek());
      if (peek().kind != Tok::ident)
        fail(parse_codes::kMalformedIndex, peek(), "expected index name, found " + describe(peek()));
      p.name = next().text;
      if (!at_keyword("as"))
        fail(parse_codes::kMalformedIndex, peek(), "expected 'as' after index name, found " + describe(peek()));
      next();
      if (peek().kind != Tok::ident)
        fail(parse_codes::kMalformedIndex, peek(), "expected index type, found " + describe(peek()));
      p.type = type();
      out.push_back(std::move(p));
      if (peek().kind != Tok::comma) break;
      if (single)
        fail(parse_codes::kMalformedIndex, peek(), "a context output takes a single index");
      next();
    }
    return out;
  }

  Declaration declaration() {
    if (peek().kind == Tok::ident) {
      const std::string& kw = peek().text;
      if (kw == "device") return device();
      if (kw == "action") return action();
      if (kw == "structure") return structure();
      if (kw == "enumeration") return enumeration();
      if (kw == "context") return context();
      if (kw == "controller") return controller();
    }
    unexpected("declaration");
  }

  DeviceDecl device() {
    DeviceDecl d;
    d.loc = loc(next());
    d.name = identifier("device name");
    if (at_keyword("extends")) {
      next();
      d.parent = identifier("parent device name");
      // Single inheritance: further parents are reported and dropped.
      while (at_keyword("extends") || peek().kind == Tok::comma) {
        report(parse_codes::kDuplicateExtends, peek(), "device '" + d.name + "' may extend only one device");
        next();
        if (peek().kind == Tok::ident && !at_keyword("extends")) next();
      }
    }
    const Token& open = expect(Tok::lbrace, "'{'");
    for (;;) {
      check_block_open(open);
      if (peek().kind == Tok::rbrace) break;
      Location at = loc(peek());
      if (at_keyword("attribute")) {
        next();
        AttributeDecl a;
        a.loc = at;
        a.name = identifier("attribute name");
        keyword("as");
        a.type = type();
        expect(Tok::semi, "';'");
        d.attributes.push_back(std::move(a));
      } else if (at_keyword("source")) {
        next();
        SourceDecl s;
        s.loc = at;
        s.name = identifier("source name");
        keyword("as");
        s.valueType = type();
        if (at_keyword("indexed")) s.indices = index_clause(false);
        expect(Tok::semi, "';'");
        d.sources.push_back(std::move(s));
      } else if (at_keyword("action")) {
        next();
        ActionRefDecl r;
        r.loc = at;
        r.name = identifier("action name");
        expect(Tok::semi, "';'");
        d.actionRefs.push_back(std::move(r));
      } else {
        unexpected("'attribute', 'source', 'action' or '}'");
      }
    }
    next();
    return d;
  }

  ActionDecl action() {
    ActionDecl a;
    a.loc = loc(next());
    a.name = identifier("action name");
    const Token& open = expect(Tok::lbrace, "'{'");
    for (;;) {
      check_block_open(open);
      if (peek().kind == Tok::rbrace) break;
      MethodDecl m;
      m.loc = loc(peek());
      m.name = identifier("method name or '}'");
      expect(Tok::lparen, "'('");
      if (peek().kind != Tok::rparen) {
        m.params.push_back(param());
        while (peek().kind == Tok::comma) {
          next();
          m.params.push_back(param());
        }
      }
      expect(Tok::rparen, "')'");
      expect(Tok::semi, "';'");
      a.methods.push_back(std::move(m));
    }
    next();
    return a;
  }

  StructDecl structure() {
    StructDecl s;
    s.loc = loc(next());
    s.name = identifier("structure name");
    const Token& open = expect(Tok::lbrace, "'{'");
    for (;;) {
      check_block_open(open);
      if (peek().kind == Tok::rbrace) break;
      Param f = param();
      expect(Tok::semi, "';'");
      s.fields.push_back(std::move(f));
    }
    next();
    return s;
  }

  EnumDecl enumeration() {
    EnumDecl e;
    e.loc = loc(next());
    e.name = identifier("enumeration name");
    const Token& open = expect(Tok::lbrace, "'{'");
    check_block_open(open);
    e.values.push_back(identifier("enumeration value"));
    for (;;) {
      check_block_open(open);
      if (peek().kind == Tok::rbrace) break;
      expect(Tok::comma, "',' or '}'");
      check_block_open(open);
      e.values.push_back(identifier("enumeration value"));
    }
    next();
    return e;
  }

  void component_body(const Token& open, std::vector<InputBinding>& inputs,
                      std::vector<ActionUse>& actions) {
    for (;;) {
      check_block_open(open);
      if (peek().kind == Tok::rbrace) break;
      Location at = loc(peek());
      if (at_keyword("source")) {
        next();
        InputBinding b;
        b.kind = InputBinding::Kind::entitySources;
        b.loc = at;
        b.sourceNames.push_back(identifier("source name"));
        while (peek().kind == Tok::comma) {
          next();
          b.sourceNames.push_back(identifier("source name"));
        }
        keyword("from");
        b.deviceClass = identifier("device name");
        expect(Tok::semi, "';'");
        inputs.push_back(std::move(b));
      } else if (at_keyword("context")) {
        next();
        InputBinding b;
        b.kind = InputBinding::Kind::contextRef;
        b.loc = at;
        b.contextName = identifier("context name");
        expect(Tok::semi, "';'");
        inputs.push_back(std::move(b));
      } else if (at_keyword("action")) {
        next();
        ActionUse u;
        u.loc = at;
        u.action = identifier("action name");
        keyword("on");
        u.deviceClass = identifier("device name");
        expect(Tok::semi, "';'");
        actions.push_back(std::move(u));
      } else {
        unexpected("'source', 'context', 'action' or '}'");
      }
    }
    next();
  }

  ContextDecl context() {
    ContextDecl c;
    c.loc = loc(next());
    c.name = identifier("context name");
    keyword("as");
    c.outputType = type();
    if (at_keyword("indexed")) c.outputIndices = index_clause(true);
    const Token& open = expect(Tok::lbrace, "'{'");
    component_body(open, c.inputs, c.actionUses);
    return c;
  }

  ControllerDecl controller() {
    ControllerDecl c;
    c.loc = loc(next());
    c.name = identifier("controller name");
    const Token& open = expect(Tok::lbrace, "'{'");
    component_body(open, c.inputs, c.actionUses);
    return c;
  }

  const SourceFile& file_;
  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

SourceUnit parse_unit(const SourceFile& file, std::vector<Diagnostic>& diagnostics) {
  Lexer lexer(file, diagnostics);
  Parser parser(file, lexer.run(), diagnostics);
  return SourceUnit{file.path, file.text, parser.run()};
}

ParseResult parse(const std::vector<SourceFile>& files) {
  ParseResult result;
  for (const auto& f : files) {
    SourceUnit unit = parse_unit(f, result.diagnostics);
    for (auto& d : unit.declarations) result.model.declarations.push_back(std::move(d));
  }
  return result;
}

}  // namespace diakit
