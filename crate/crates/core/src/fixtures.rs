//! A small corpus of vulnerable/patched C function pairs with matching commit
//! records, used by the test suites, the acceptance harness and the CLI demo.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfront::NodeKind;
use crate::cpg::{EdgeKind, EdgeType};
use crate::ingest::{CommitRecord, CweLabel, GraphEdge, GraphNode, GraphRecord};

/// Vulnerable side of the buffer-overflow example patch.
pub const HANDLER_VULNERABLE: &str = "int handle_request(struct usb_request *req, char *buf) {
    int len = req->len;
    if (req->len >= 8)
        memcpy(buf, req->data, req->len);
    return process(buf, len);
}
";

/// Patched side of the buffer-overflow example patch.
pub const HANDLER_PATCHED: &str = "int handle_request(struct usb_request *req, char *buf) {
    int len = req->len;
    if (len > 8)
        len = 8;
    return process(buf, len);
}
";

/// The example patch as a unified diff. Code occupies lines 5-12; lines 7-8
/// are deleted and lines 9-10 added.
pub const HANDLER_DIFF: &str = "diff --git a/drivers/usb/request.c b/drivers/usb/request.c
--- a/drivers/usb/request.c
+++ b/drivers/usb/request.c
@@ -1,6 +1,6 @@
 int handle_request(struct usb_request *req, char *buf) {
     int len = req->len;
-    if (req->len >= 8)
-        memcpy(buf, req->data, req->len);
+    if (len > 8)
+        len = 8;
     return process(buf, len);
 }
";

#[derive(Debug, Clone, Copy)]
pub struct FixturePair {
    pub name: &'static str,
    pub cwe: CweLabel,
    pub message: &'static str,
    pub vulnerable: &'static str,
    pub patched: &'static str,
}

const PAIRS: &[FixturePair] = &[
    FixturePair {
        name: "load_config",
        cwe: CweLabel::Cwe404,
        message: "config: fix memory leak on short read",
        vulnerable: "int load_config(const char *path, struct config *cfg) {
    int version = 2;
    int retries = 0;
    char *buf = malloc(4096);
    int fd = open(path, 0);
    if (fd < 0)
        return -1;
    retries = retries + 1;
    if (read(fd, buf, 4096) <= 0)
        return -1;
    cfg->version = version;
    parse_config(cfg, buf);
    free(buf);
    close(fd);
    return 0;
}
",
        patched: "int load_config(const char *path, struct config *cfg) {
    int version = 2;
    int retries = 0;
    char *buf = malloc(4096);
    int fd = open(path, 0);
    if (fd < 0)
        return -1;
    retries = retries + 1;
    if (read(fd, buf, 4096) <= 0) {
        free(buf);
        close(fd);
        return -1;
    }
    cfg->version = version;
    parse_config(cfg, buf);
    free(buf);
    close(fd);
    return 0;
}
",
    },
    FixturePair {
        name: "copy_name",
        cwe: CweLabel::Cwe404,
        message: "device: plug memory leak when name validation fails",
        vulnerable: "int copy_name(struct device *dev, const char *name) {
    int len = strlen(name);
    int status = 0;
    char *tmp = malloc(len + 1);
    if (!tmp)
        return -12;
    status = validate(name);
    if (status != 0)
        return status;
    memcpy(tmp, name, len);
    dev->name = tmp;
    dev->flags = 1;
    return 0;
}
",
        patched: "int copy_name(struct device *dev, const char *name) {
    int len = strlen(name);
    int status = 0;
    char *tmp = malloc(len + 1);
    if (!tmp)
        return -12;
    status = validate(name);
    if (status != 0) {
        free(tmp);
        return status;
    }
    memcpy(tmp, name, len);
    dev->name = tmp;
    dev->flags = 1;
    return 0;
}
",
    },
    FixturePair {
        name: "fill_info",
        cwe: CweLabel::Cwe404,
        message: "ioctl: avoid info leak of uninitialized padding",
        vulnerable: "int fill_info(struct info_req *req, char *out) {
    struct info data;
    int count = 0;
    int mode = req->mode;
    data.id = req->id;
    count = count + 1;
    data.mode = mode;
    copy_to_user(out, &data, sizeof(data));
    return count;
}
",
        patched: "int fill_info(struct info_req *req, char *out) {
    struct info data;
    memset(&data, 0, sizeof(data));
    int count = 0;
    int mode = req->mode;
    data.id = req->id;
    count = count + 1;
    data.mode = mode;
    copy_to_user(out, &data, sizeof(data));
    return count;
}
",
    },
    FixturePair {
        name: "release_session",
        cwe: CweLabel::Cwe404,
        message: "session: fix memory leak of the receive buffer",
        vulnerable: "void release_session(struct session *s) {
    int refs = s->refs;
    int logged = 0;
    refs = refs - 1;
    s->refs = refs;
    if (refs == 0) {
        logged = log_event(s->id);
        s->state = 0;
    }
    s->last = logged;
}
",
        patched: "void release_session(struct session *s) {
    int refs = s->refs;
    int logged = 0;
    refs = refs - 1;
    s->refs = refs;
    if (refs == 0) {
        logged = log_event(s->id);
        free(s->buffer);
        s->state = 0;
    }
    s->last = logged;
}
",
    },
    FixturePair {
        name: "skip_padding",
        cwe: CweLabel::Cwe835,
        message: "parser: fix infinite loop on zero padding",
        vulnerable: "int skip_padding(const unsigned char *p, int len) {
    int i = 0;
    int pad = 0;
    int total = len;
    while (i < len) {
        if (p[i] != 0)
            break;
        pad = pad + 1;
    }
    total = total - pad;
    return total;
}
",
        patched: "int skip_padding(const unsigned char *p, int len) {
    int i = 0;
    int pad = 0;
    int total = len;
    while (i < len) {
        if (p[i] != 0)
            break;
        pad = pad + 1;
        i = i + 1;
    }
    total = total - pad;
    return total;
}
",
    },
    FixturePair {
        name: "count_entries",
        cwe: CweLabel::Cwe835,
        message: "list: bail out of endless loop on corrupted chain",
        vulnerable: "int count_entries(struct node *head) {
    struct node *cur = head;
    int count = 0;
    int depth = 0;
    while (cur != NULL) {
        count = count + 1;
        depth = depth + 2;
        cur = cur->next;
    }
    return count;
}
",
        patched: "int count_entries(struct node *head) {
    struct node *cur = head;
    int count = 0;
    int depth = 0;
    while (cur != NULL) {
        count = count + 1;
        if (count > 1024)
            break;
        depth = depth + 2;
        cur = cur->next;
    }
    return count;
}
",
    },
    FixturePair {
        name: "walk_tree",
        cwe: CweLabel::Cwe835,
        message: "tree: limit deep recursion on malformed input",
        vulnerable: "int walk_tree(struct tree *t, int level) {
    int sum = 0;
    int width = t->width;
    if (t == NULL)
        return 0;
    sum = t->value;
    width = width * 2;
    sum = sum + walk_tree(t->left, level + 1);
    return sum;
}
",
        patched: "int walk_tree(struct tree *t, int level) {
    int sum = 0;
    int width = t->width;
    if (t == NULL)
        return 0;
    if (level > 64)
        return -1;
    sum = t->value;
    width = width * 2;
    sum = sum + walk_tree(t->left, level + 1);
    return sum;
}
",
    },
    FixturePair {
        name: "read_chunks",
        cwe: CweLabel::Cwe835,
        message: "stream: avoid long loop when read returns zero",
        vulnerable: "int read_chunks(struct stream *st) {
    int n = 0;
    int chunks = 0;
    int size = st->size;
    for (;;) {
        n = read_chunk(st);
        chunks = chunks + 1;
        if (n < 0)
            break;
    }
    size = size + chunks;
    return chunks;
}
",
        patched: "int read_chunks(struct stream *st) {
    int n = 0;
    int chunks = 0;
    int size = st->size;
    for (;;) {
        n = read_chunk(st);
        chunks = chunks + 1;
        if (n <= 0)
            break;
    }
    size = size + chunks;
    return chunks;
}
",
    },
    FixturePair {
        name: "handle_request",
        cwe: CweLabel::Cwe120,
        message: "usb: fix buffer overflow in request handler",
        vulnerable: HANDLER_VULNERABLE,
        patched: HANDLER_PATCHED,
    },
    FixturePair {
        name: "set_label",
        cwe: CweLabel::Cwe120,
        message: "widget: fix buffer overflow when copying label text",
        vulnerable: "int set_label(struct widget *w, const char *text) {
    char label[32];
    int len = strlen(text);
    int color = w->color;
    color = color + 1;
    strcpy(label, text);
    w->color = color;
    return update_label(w, label, len);
}
",
        patched: "int set_label(struct widget *w, const char *text) {
    char label[32];
    int len = strlen(text);
    int color = w->color;
    color = color + 1;
    strncpy(label, text, sizeof(label) - 1);
    label[31] = 0;
    w->color = color;
    return update_label(w, label, len);
}
",
    },
    FixturePair {
        name: "parse_header",
        cwe: CweLabel::Cwe120,
        message: "proto: check payload size to prevent buffer overflow",
        vulnerable: "int parse_header(const unsigned char *data, int size, struct header *h) {
    int offset = 0;
    int type = data[0];
    int flags = 0;
    h->type = type;
    offset = offset + 1;
    flags = data[1];
    memcpy(h->payload, data + 2, size - 2);
    h->flags = flags;
    return offset;
}
",
        patched: "int parse_header(const unsigned char *data, int size, struct header *h) {
    int offset = 0;
    int type = data[0];
    int flags = 0;
    h->type = type;
    offset = offset + 1;
    flags = data[1];
    if (size - 2 > 64)
        return -1;
    memcpy(h->payload, data + 2, size - 2);
    h->flags = flags;
    return offset;
}
",
    },
    FixturePair {
        name: "append_byte",
        cwe: CweLabel::Cwe120,
        message: "buffer: reject writes past capacity (buffer overflow)",
        vulnerable: "void append_byte(struct buffer *b, int value) {
    int pos = b->len;
    int seen = b->seen;
    seen = seen + 1;
    b->data[pos] = value;
    b->len = pos + 1;
    b->seen = seen;
}
",
        patched: "void append_byte(struct buffer *b, int value) {
    int pos = b->len;
    int seen = b->seen;
    seen = seen + 1;
    if (pos >= b->cap)
        return;
    b->data[pos] = value;
    b->len = pos + 1;
    b->seen = seen;
}
",
    },
    FixturePair {
        name: "close_conn",
        cwe: CweLabel::Cwe672,
        message: "net: fix double free of connection buffer",
        vulnerable: "void close_conn(struct conn *c) {
    int id = c->id;
    int flags = c->flags;
    free(c->buf);
    flags = flags | 2;
    c->flags = flags;
    notify(id);
    free(c->buf);
}
",
        patched: "void close_conn(struct conn *c) {
    int id = c->id;
    int flags = c->flags;
    free(c->buf);
    c->buf = NULL;
    flags = flags | 2;
    c->flags = flags;
    notify(id);
    free(c->buf);
}
",
    },
    FixturePair {
        name: "drop_item",
        cwe: CweLabel::Cwe672,
        message: "list: fix use after free when logging removed item",
        vulnerable: "int drop_item(struct list *l, struct item *it) {
    int count = l->count;
    int key = it->key;
    remove_item(l, it);
    free(it);
    count = count - 1;
    l->count = count;
    log_key(it->key);
    return key;
}
",
        patched: "int drop_item(struct list *l, struct item *it) {
    int count = l->count;
    int key = it->key;
    remove_item(l, it);
    free(it);
    count = count - 1;
    l->count = count;
    log_key(key);
    return key;
}
",
    },
    FixturePair {
        name: "destroy_ctx",
        cwe: CweLabel::Cwe672,
        message: "ctx: remove double-free of context data",
        vulnerable: "void destroy_ctx(struct ctx *ctx) {
    int active = ctx->active;
    int users = 0;
    users = ctx->users;
    free(ctx->data);
    ctx->active = 0;
    if (users > 0)
        free(ctx->data);
    report(active, users);
}
",
        patched: "void destroy_ctx(struct ctx *ctx) {
    int active = ctx->active;
    int users = 0;
    users = ctx->users;
    free(ctx->data);
    ctx->active = 0;
    report(active, users);
}
",
    },
    FixturePair {
        name: "finish_request",
        cwe: CweLabel::Cwe672,
        message: "request: fix UAF reading status after release",
        vulnerable: "int finish_request(struct request *r) {
    int status = r->status;
    int retries = r->retries;
    release(r);
    retries = retries + 1;
    status = r->status;
    return status + retries;
}
",
        patched: "int finish_request(struct request *r) {
    int status = r->status;
    int retries = r->retries;
    release(r);
    retries = retries + 1;
    return status + retries;
}
",
    },
    FixturePair {
        name: "inc_counter",
        cwe: CweLabel::Cwe362,
        message: "stats: fix race conditions on counter update",
        vulnerable: "int inc_counter(struct stats *st) {
    int value = 0;
    int calls = 0;
    calls = calls + 1;
    value = st->counter;
    st->counter = value + 1;
    return calls;
}
",
        patched: "int inc_counter(struct stats *st) {
    int value = 0;
    int calls = 0;
    calls = calls + 1;
    lock(&st->mutex);
    value = st->counter;
    st->counter = value + 1;
    unlock(&st->mutex);
    return calls;
}
",
    },
    FixturePair {
        name: "set_state",
        cwe: CweLabel::Cwe362,
        message: "device: close race conditions between state readers and writers",
        vulnerable: "void set_state(struct device *dev, int state) {
    int old = 0;
    int changes = dev->changes;
    old = dev->state;
    changes = changes + 1;
    dev->state = state;
    dev->changes = changes;
    if (old != state)
        notify_state(dev, old);
}
",
        patched: "void set_state(struct device *dev, int state) {
    int old = 0;
    int changes = dev->changes;
    spin_lock(&dev->lock);
    old = dev->state;
    changes = changes + 1;
    dev->state = state;
    spin_unlock(&dev->lock);
    dev->changes = changes;
    if (old != state)
        notify_state(dev, old);
}
",
    },
    FixturePair {
        name: "open_file",
        cwe: CweLabel::Cwe362,
        message: "fs: take table lock to avoid race conditions on lookup",
        vulnerable: "int open_file(struct file_table *t, int fd) {
    struct file *f = NULL;
    int hits = 0;
    hits = t->hits;
    f = t->files[fd];
    if (f == NULL)
        return -1;
    f->refs = f->refs + 1;
    t->hits = hits + 1;
    return 0;
}
",
        patched: "int open_file(struct file_table *t, int fd) {
    struct file *f = NULL;
    int hits = 0;
    hits = t->hits;
    mutex_lock(&t->lock);
    f = t->files[fd];
    if (f == NULL)
        return -1;
    f->refs = f->refs + 1;
    t->hits = hits + 1;
    return 0;
}
",
    },
    FixturePair {
        name: "update_config",
        cwe: CweLabel::Cwe362,
        message: "server: fix race conditions while publishing new config",
        vulnerable: "void update_config(struct server *srv, int value) {
    int version = srv->version;
    int applied = 0;
    version = version + 1;
    srv->value = value;
    srv->version = version;
    applied = 1;
    log_update(applied);
}
",
        patched: "void update_config(struct server *srv, int value) {
    int version = srv->version;
    int applied = 0;
    version = version + 1;
    write_lock(&srv->cfg_lock);
    srv->value = value;
    srv->version = version;
    write_unlock(&srv->cfg_lock);
    applied = 1;
    log_update(applied);
}
",
    },
];

/// The twenty fixture pairs, four per weakness type.
pub fn corpus() -> &'static [FixturePair] {
    PAIRS
}

/// Deterministic 40-hex-digit pseudo commit id.
pub fn fake_sha(seed: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut out = String::new();
    for round in 0..3u64 {
        for b in seed.bytes().chain(round.to_le_bytes()) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        out.push_str(&format!("{h:016x}"));
    }
    out.truncate(40);
    out
}

/// Unified diff of one file whose only change is `old` -> `new`, emitted as a
/// single hunk carrying the whole function as context (as `git diff
/// --function-context` does). `first_line` is where the function starts.
pub fn function_diff(path: &str, old: &str, new: &str, first_line: usize) -> String {
    let a: Vec<&str> = old.lines().collect();
    let b: Vec<&str> = new.lines().collect();
    let mut body = String::new();
    for op in line_diff(&a, &b) {
        match op {
            LineOp::Same(l) => body.push_str(&format!(" {l}\n")),
            LineOp::Del(l) => body.push_str(&format!("-{l}\n")),
            LineOp::Add(l) => body.push_str(&format!("+{l}\n")),
        }
    }
    format!(
        "diff --git a/{path} b/{path}\n--- a/{path}\n+++ b/{path}\n@@ -{first_line},{} +{first_line},{} @@\n{body}",
        a.len(),
        b.len()
    )
}

enum LineOp<'a> {
    Same(&'a str),
    Del(&'a str),
    Add(&'a str),
}

fn line_diff<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<LineOp<'a>> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            out.push(LineOp::Same(a[i]));
            i += 1;
            j += 1;
        } else if j == m || (i < n && lcs[i + 1][j] >= lcs[i][j + 1]) {
            out.push(LineOp::Del(a[i]));
            i += 1;
        } else {
            out.push(LineOp::Add(b[j]));
            j += 1;
        }
    }
    out
}

/// Appends `_{suffix}` to the function name so copies of a fixture are
/// distinct functions.
pub fn renamed(code: &str, name: &str, suffix: &str) -> String {
    code.replacen(&format!("{name}("), &format!("{name}_{suffix}("), 1)
}

/// One commit per fixture pair, repeated `copies` times with renamed
/// functions, plus three commits that the filter must reject: an ambiguous
/// label, a two-function change and a message without keywords.
pub fn commit_dump(copies: usize) -> Vec<CommitRecord> {
    let mut out = Vec::new();
    for k in 0..copies {
        for (i, p) in PAIRS.iter().enumerate() {
            let (old, new) = if k == 0 {
                (p.vulnerable.to_string(), p.patched.to_string())
            } else {
                let s = format!("c{k}");
                (renamed(p.vulnerable, p.name, &s), renamed(p.patched, p.name, &s))
            };
            let path = format!("src/{}.c", p.name);
            out.push(CommitRecord {
                project: format!("fixture-{}", p.cwe.as_str()),
                sha: fake_sha(&format!("{}-{k}-{i}", p.name)),
                message: p.message.to_string(),
                diff: function_diff(&path, &old, &new, 10 + 7 * i),
            });
        }
    }
    out.extend(rejected_commits());
    out
}

/// Commits that the filter must exclude, one per exclusion reason.
pub fn rejected_commits() -> Vec<CommitRecord> {
    let two = &PAIRS[1];
    let three = &PAIRS[2];
    let mut multi = function_diff("src/multi.c", two.vulnerable, two.patched, 20);
    let second = function_diff("src/multi.c", three.vulnerable, three.patched, 80);
    multi.push_str(second.split_once("@@ -").map(|(_, rest)| rest).map(|r| format!("@@ -{r}")).unwrap().as_str());
    vec![
        CommitRecord {
            project: "fixture-mixed".into(),
            sha: fake_sha("ambiguous"),
            message: "Fix buffer overflow and double free in parser".into(),
            diff: function_diff("src/amb.c", PAIRS[10].vulnerable, PAIRS[10].patched, 5),
        },
        CommitRecord {
            project: "fixture-mixed".into(),
            sha: fake_sha("multi"),
            message: "Fix memory leak in two helpers".into(),
            diff: multi,
        },
        CommitRecord {
            project: "fixture-mixed".into(),
            sha: fake_sha("nokeyword"),
            message: "Update README and tidy helper".into(),
            diff: function_diff("src/tidy.c", PAIRS[3].vulnerable, PAIRS[3].patched, 1),
        },
    ]
}

/// One clean commit per weakness type plus the three rejects.
pub fn accounting_dump() -> Vec<CommitRecord> {
    let mut out: Vec<CommitRecord> = CweLabel::ALL
        .iter()
        .map(|&cwe| {
            let (i, p) = PAIRS.iter().enumerate().find(|(_, p)| p.cwe == cwe).unwrap();
            CommitRecord {
                project: "fixture-accounting".into(),
                sha: fake_sha(&format!("acct-{i}")),
                message: p.message.to_string(),
                diff: function_diff(&format!("src/{}.c", p.name), p.vulnerable, p.patched, 3),
            }
        })
        .collect();
    out.extend(rejected_commits());
    out
}

/// Builds a graph record; each `(src, dst, kind)` edge is added together
/// with its reverse-typed mirror.
pub fn graph_record(id: &str, label: u8, tokens: &[Vec<String>], edges: &[(usize, usize, EdgeKind)]) -> GraphRecord {
    let mut out = Vec::new();
    for &(src, dst, kind) in edges {
        let ty = EdgeType::forward(kind);
        out.push(GraphEdge { src, dst, ty: ty.code() });
        out.push(GraphEdge { src: dst, dst: src, ty: ty.reversed().code() });
    }
    GraphRecord {
        function_id: id.to_string(),
        label,
        cwe: CweLabel::Cwe120,
        nodes: tokens.iter().enumerate().map(|(id, t)| GraphNode { id, kind: NodeKind::Expr, code: t.clone() }).collect(),
        edges: out,
    }
}

/// A random connected graph of `nodes` nodes with 1-3 tokens per node drawn
/// from `t0`..`t7`, and edges of the given kinds.
pub fn random_graph(rng: &mut impl Rng, nodes: usize, kinds: &[EdgeKind]) -> (Vec<Vec<String>>, Vec<(usize, usize, EdgeKind)>) {
    let tokens: Vec<Vec<String>> =
        (0..nodes).map(|_| (0..rng.random_range(1..=3)).map(|_| format!("t{}", rng.random_range(0..8))).collect()).collect();
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize, EdgeKind)> = order.windows(2).map(|w| (w[0], w[1], *kinds.choose(rng).unwrap())).collect();
    for _ in 0..nodes / 2 {
        let (a, b) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
        if a != b {
            edges.push((a, b, *kinds.choose(rng).unwrap()));
        }
    }
    (tokens, edges)
}

/// Pairs of graphs that are identical except for one edge, which is a
/// control edge in the positive twin and a flow edge in the negative one.
/// Twins are adjacent in the output (positive first) and share a pair id.
pub fn separable_graphs(pairs: usize, seed: u64) -> Vec<GraphRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = [EdgeKind::Ast, EdgeKind::DefineUse, EdgeKind::Reach];
    let mut out = Vec::with_capacity(2 * pairs);
    for i in 0..pairs {
        let n = rng.random_range(4..=7);
        let (tokens, mut edges) = random_graph(&mut rng, n, &background);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        edges.push((a, b, EdgeKind::Control));
        out.push(graph_record(&format!("pair{i}+"), 1, &tokens, &edges));
        edges.last_mut().unwrap().2 = EdgeKind::FlowTo;
        out.push(graph_record(&format!("pair{i}-"), 0, &tokens, &edges));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_source;

    #[test]
    fn every_fixture_parses_cleanly() {
        for p in corpus() {
            for code in [p.vulnerable, p.patched] {
                let ast = parse_source(code).unwrap_or_else(|e| panic!("{}: {e}", p.name));
                assert!(ast.nodes.iter().all(|n| !n.opaque), "{} has opaque statements", p.name);
                assert_eq!(ast.name, p.name);
            }
        }
        assert_eq!(corpus().len(), 20);
    }

    #[test]
    fn separable_twins_differ_in_one_edge_type() {
        let gs = separable_graphs(20, 3);
        for pair in gs.chunks(2) {
            let (pos, neg) = (&pair[0], &pair[1]);
            assert_eq!((pos.label, neg.label), (1, 0));
            assert_eq!(pos.nodes, neg.nodes);
            let diff: Vec<_> = pos.edges.iter().zip(&neg.edges).filter(|(a, b)| a != b).collect();
            assert_eq!(diff.len(), 2);
            assert!(diff.iter().all(|(a, b)| (a.src, a.dst) == (b.src, b.dst)));
        }
    }

    #[test]
    fn handler_diff_matches_generator() {
        assert_eq!(function_diff("drivers/usb/request.c", HANDLER_VULNERABLE, HANDLER_PATCHED, 1), HANDLER_DIFF);
    }
}
