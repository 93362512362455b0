/* Native measurement kernels: pinned worker threads, C11 atomics, and a
 * monotonic clock.  Everything here runs with the GIL released and never
 * touches Python state from worker threads.
 *
 * Exposed kernels:
 *   timer_resolution_ns()                    CLOCK_MONOTONIC resolution
 *   work_streams(cores, work, duration)      lock-free counted work loops
 *   store_rmw_cost(core, rounds)             uncontended atomic exchange
 *   load_hit_cost(core, rounds)              dependent loads, own cache
 *   load_remote_cost(core_a, core_b, rounds) dependent loads, remote cache
 *   mcs_bench(cores, c, p, duration)         the MCS-locked operation loop
 *
 * The work unit everywhere is one iteration of spin_work(): an empty counted
 * loop whose body is a volatile asm barrier, so the compiler can neither
 * collapse nor vectorize it.
 */

#define PY_SSIZE_T_CLEAN
#include <Python.h>

#include <errno.h>
#include <pthread.h>
#include <sched.h>
#include <stdatomic.h>
#include <stdint.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#define CACHELINE 128 /* two 64B lines: keeps the adjacent-line prefetcher out */
#define CHAIN_LINES 64

static inline uint64_t now_ns(void) {
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
}

static inline void cpu_relax(void) {
#if defined(__x86_64__) || defined(__i386__)
    __asm__ __volatile__("pause");
#elif defined(__aarch64__)
    __asm__ __volatile__("yield");
#else
    __asm__ __volatile__("" ::: "memory");
#endif
}

static inline void spin_work(uint64_t units) {
    for (uint64_t i = 0; i < units; i++)
        __asm__ __volatile__("");
}

static int pin_to_core(int core) {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(core, &set);
    return pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
}

/* The single-threaded kernels pin the calling (Python) thread; save and
 * restore its affinity so the pin does not leak into the interpreter. */
typedef struct {
    cpu_set_t mask;
    int valid;
} saved_affinity_t;

static saved_affinity_t save_affinity(void) {
    saved_affinity_t s;
    s.valid = pthread_getaffinity_np(pthread_self(), sizeof(s.mask), &s.mask) == 0;
    return s;
}

static void restore_affinity(const saved_affinity_t *s) {
    if (s->valid)
        pthread_setaffinity_np(pthread_self(), sizeof(s->mask), &s->mask);
}

/* Busy-free sleep until an absolute monotonic deadline. */
static void sleep_until_ns(uint64_t deadline) {
    for (;;) {
        uint64_t now = now_ns();
        if (now >= deadline)
            return;
        uint64_t left = deadline - now;
        struct timespec ts = {(time_t)(left / 1000000000ull),
                              (long)(left % 1000000000ull)};
        nanosleep(&ts, NULL);
    }
}

/* ---------------------------------------------------------------- timer */

static PyObject *py_timer_resolution_ns(PyObject *self, PyObject *args) {
    (void)self;
    (void)args;
    struct timespec ts;
    clock_getres(CLOCK_MONOTONIC, &ts);
    double res = (double)ts.tv_sec * 1e9 + (double)ts.tv_nsec;
    return PyFloat_FromDouble(res);
}

/* ---------------------------------------------------------- work streams */

typedef struct {
    int core;
    uint64_t work_per_op;
    uint64_t ops;
    int pin_err;
    _Atomic int *start;
    _Atomic int *stop;
    _Atomic int *ready;
    char pad[CACHELINE];
} work_arg_t;

static void *work_worker(void *vp) {
    work_arg_t *a = (work_arg_t *)vp;
    a->pin_err = pin_to_core(a->core);
    atomic_fetch_add(a->ready, 1);
    if (a->pin_err) {
        atomic_store(a->stop, 1);
        return NULL;
    }
    while (!atomic_load_explicit(a->start, memory_order_acquire)) {
        if (atomic_load(a->stop))
            return NULL;
        cpu_relax();
    }
    uint64_t ops = 0;
    while (!atomic_load_explicit(a->stop, memory_order_relaxed)) {
        spin_work(a->work_per_op);
        ops++;
    }
    a->ops = ops;
    return NULL;
}

static int parse_cores(PyObject *seq, int **out, Py_ssize_t *n_out) {
    PyObject *fast = PySequence_Fast(seq, "cores must be a sequence of ints");
    if (!fast)
        return -1;
    Py_ssize_t n = PySequence_Fast_GET_SIZE(fast);
    if (n < 1) {
        Py_DECREF(fast);
        PyErr_SetString(PyExc_ValueError, "need at least one core");
        return -1;
    }
    int *cores = (int *)malloc(sizeof(int) * (size_t)n);
    if (!cores) {
        Py_DECREF(fast);
        PyErr_NoMemory();
        return -1;
    }
    for (Py_ssize_t i = 0; i < n; i++) {
        long v = PyLong_AsLong(PySequence_Fast_GET_ITEM(fast, i));
        if (v == -1 && PyErr_Occurred()) {
            free(cores);
            Py_DECREF(fast);
            return -1;
        }
        cores[i] = (int)v;
    }
    Py_DECREF(fast);
    *out = cores;
    *n_out = n;
    return 0;
}

static PyObject *ops_result(double elapsed_s, uint64_t *ops, Py_ssize_t n) {
    PyObject *list = PyList_New(n);
    if (!list)
        return NULL;
    for (Py_ssize_t i = 0; i < n; i++) {
        PyObject *v = PyLong_FromUnsignedLongLong(ops[i]);
        if (!v) {
            Py_DECREF(list);
            return NULL;
        }
        PyList_SET_ITEM(list, i, v);
    }
    PyObject *out = Py_BuildValue("(dN)", elapsed_s, list);
    return out;
}

static PyObject *py_work_streams(PyObject *self, PyObject *args) {
    (void)self;
    PyObject *cores_obj;
    unsigned long long work_per_op;
    double duration_s;
    if (!PyArg_ParseTuple(args, "OKd", &cores_obj, &work_per_op, &duration_s))
        return NULL;
    if (duration_s <= 0) {
        PyErr_SetString(PyExc_ValueError, "duration must be positive");
        return NULL;
    }
    int *cores;
    Py_ssize_t n;
    if (parse_cores(cores_obj, &cores, &n))
        return NULL;

    _Atomic int start = 0, stop = 0, ready = 0;
    work_arg_t *wa = (work_arg_t *)calloc((size_t)n, sizeof(work_arg_t));
    pthread_t *tids = (pthread_t *)calloc((size_t)n, sizeof(pthread_t));
    if (!wa || !tids) {
        free(wa);
        free(tids);
        free(cores);
        return PyErr_NoMemory();
    }
    double elapsed_s = 0.0;
    int pin_err = 0, spawn_err = 0;
    Py_ssize_t spawned = 0;

    Py_BEGIN_ALLOW_THREADS;
    for (Py_ssize_t i = 0; i < n; i++) {
        wa[i].core = cores[i];
        wa[i].work_per_op = work_per_op;
        wa[i].start = &start;
        wa[i].stop = &stop;
        wa[i].ready = &ready;
        if (pthread_create(&tids[i], NULL, work_worker, &wa[i])) {
            spawn_err = errno ? errno : EAGAIN;
            atomic_store(&stop, 1);
            break;
        }
        spawned++;
    }
    if (!spawn_err) {
        while (atomic_load(&ready) < (int)n)
            cpu_relax();
        if (!atomic_load(&stop)) {
            uint64_t t0 = now_ns();
            atomic_store_explicit(&start, 1, memory_order_release);
            sleep_until_ns(t0 + (uint64_t)(duration_s * 1e9));
            atomic_store_explicit(&stop, 1, memory_order_release);
            elapsed_s = (double)(now_ns() - t0) / 1e9;
        }
    }
    for (Py_ssize_t i = 0; i < spawned; i++)
        pthread_join(tids[i], NULL);
    for (Py_ssize_t i = 0; i < spawned; i++)
        if (wa[i].pin_err) {
            pin_err = wa[i].pin_err;
            break;
        }
    Py_END_ALLOW_THREADS;

    PyObject *out = NULL;
    if (spawn_err)
        PyErr_Format(PyExc_OSError, "pthread_create failed: %s", strerror(spawn_err));
    else if (pin_err)
        PyErr_Format(PyExc_OSError, "failed to pin a worker thread: %s",
                     strerror(pin_err));
    else {
        uint64_t *ops = (uint64_t *)malloc(sizeof(uint64_t) * (size_t)n);
        if (ops) {
            for (Py_ssize_t i = 0; i < n; i++)
                ops[i] = wa[i].ops;
            out = ops_result(elapsed_s, ops, n);
            free(ops);
        } else
            PyErr_NoMemory();
    }
    free(wa);
    free(tids);
    free(cores);
    return out;
}

/* ------------------------------------------------------- line-cost kernels */

typedef struct {
    _Atomic uint64_t v;
    char pad[CACHELINE - sizeof(_Atomic uint64_t)];
} padded_u64_t;

static volatile uint64_t chase_sink;

/* Build one CHAIN_LINES-cycle permutation (Sattolo) with a fixed LCG seed. */
static void build_chain(uint64_t *next_of) {
    uint64_t perm[CHAIN_LINES];
    for (uint64_t i = 0; i < CHAIN_LINES; i++)
        perm[i] = i;
    uint64_t lcg = 0x9e3779b97f4a7c15ull;
    for (uint64_t i = CHAIN_LINES - 1; i > 0; i--) {
        lcg = lcg * 6364136223846793005ull + 1442695040888963407ull;
        uint64_t j = lcg % i; /* j < i: Sattolo keeps a single cycle */
        uint64_t t = perm[i];
        perm[i] = perm[j];
        perm[j] = t;
    }
    for (uint64_t i = 0; i < CHAIN_LINES; i++)
        next_of[perm[i]] = perm[(i + 1) % CHAIN_LINES];
}

static inline uint64_t chase(padded_u64_t *lines, uint64_t idx, uint64_t hops) {
    for (uint64_t i = 0; i < hops; i++)
        idx = atomic_load_explicit(&lines[idx].v, memory_order_relaxed);
    return idx;
}

static inline void rewrite_chain(padded_u64_t *lines, const uint64_t *next_of) {
    for (uint64_t i = 0; i < CHAIN_LINES; i++)
        atomic_store_explicit(&lines[i].v, next_of[i], memory_order_relaxed);
}

static PyObject *py_store_rmw_cost(PyObject *self, PyObject *args) {
    (void)self;
    int core;
    unsigned long long rounds;
    if (!PyArg_ParseTuple(args, "iK", &core, &rounds))
        return NULL;
    if (rounds < 1) {
        PyErr_SetString(PyExc_ValueError, "rounds must be >= 1");
        return NULL;
    }
    double ns_per_op = 0.0;
    int pin_err = 0;
    Py_BEGIN_ALLOW_THREADS;
    saved_affinity_t saved = save_affinity();
    pin_err = pin_to_core(core);
    if (!pin_err) {
        padded_u64_t line;
        atomic_store(&line.v, 0);
        for (uint64_t i = 0; i < 10000; i++)
            atomic_exchange_explicit(&line.v, i, memory_order_acq_rel);
        uint64_t t0 = now_ns();
        for (uint64_t i = 0; i < rounds; i++)
            atomic_exchange_explicit(&line.v, i, memory_order_acq_rel);
        uint64_t t1 = now_ns();
        ns_per_op = (double)(t1 - t0) / (double)rounds;
        chase_sink = atomic_load(&line.v);
    }
    restore_affinity(&saved);
    Py_END_ALLOW_THREADS;
    if (pin_err) {
        PyErr_Format(PyExc_OSError, "failed to pin to core %d: %s", core,
                     strerror(pin_err));
        return NULL;
    }
    return PyFloat_FromDouble(ns_per_op);
}

static PyObject *py_load_hit_cost(PyObject *self, PyObject *args) {
    (void)self;
    int core;
    unsigned long long rounds;
    if (!PyArg_ParseTuple(args, "iK", &core, &rounds))
        return NULL;
    if (rounds < CHAIN_LINES) {
        PyErr_SetString(PyExc_ValueError, "rounds must cover one chain pass");
        return NULL;
    }
    double ns_per_op = 0.0;
    int pin_err = 0;
    padded_u64_t *lines = (padded_u64_t *)aligned_alloc(
        CACHELINE, sizeof(padded_u64_t) * CHAIN_LINES);
    if (!lines)
        return PyErr_NoMemory();
    Py_BEGIN_ALLOW_THREADS;
    saved_affinity_t saved = save_affinity();
    pin_err = pin_to_core(core);
    if (!pin_err) {
        uint64_t next_of[CHAIN_LINES];
        build_chain(next_of);
        rewrite_chain(lines, next_of); /* own writes: lines are local after this */
        uint64_t idx = chase(lines, 0, CHAIN_LINES); /* warm pass */
        uint64_t passes = rounds / CHAIN_LINES;
        uint64_t t0 = now_ns();
        for (uint64_t p = 0; p < passes; p++)
            idx = chase(lines, idx, CHAIN_LINES);
        uint64_t t1 = now_ns();
        ns_per_op = (double)(t1 - t0) / (double)(passes * CHAIN_LINES);
        chase_sink = idx;
    }
    restore_affinity(&saved);
    Py_END_ALLOW_THREADS;
    free(lines);
    if (pin_err) {
        PyErr_Format(PyExc_OSError, "failed to pin to core %d: %s", core,
                     strerror(pin_err));
        return NULL;
    }
    return PyFloat_FromDouble(ns_per_op);
}

/* Remote-read cost: two pinned threads alternate ownership of the chain.
 * Each side times a full dependent chase of lines last written by the peer,
 * then rewrites the chain (taking ownership) and hands the turn over. */
typedef struct {
    padded_u64_t *lines;
    const uint64_t *next_of;
    uint64_t rounds;
    int core;
    int is_a;
    int pin_err;
    uint64_t total_ns;
    _Atomic uint64_t *seq_a;
    _Atomic uint64_t *seq_b;
    _Atomic int *abort_flag;
} pingpong_arg_t;

static int wait_seq(_Atomic uint64_t *seq, uint64_t want, _Atomic int *abort_flag) {
    while (atomic_load_explicit(seq, memory_order_acquire) != want) {
        if (atomic_load(abort_flag))
            return -1;
        cpu_relax();
    }
    return 0;
}

static void *pingpong_worker(void *vp) {
    pingpong_arg_t *a = (pingpong_arg_t *)vp;
    a->pin_err = pin_to_core(a->core);
    if (a->pin_err) {
        atomic_store(a->abort_flag, 1);
        /* unblock the peer whatever it waits for */
        atomic_store(a->seq_a, UINT64_MAX);
        atomic_store(a->seq_b, UINT64_MAX);
        return NULL;
    }
    uint64_t idx = 0, total = 0;
    if (a->is_a) {
        if (wait_seq(a->seq_b, 0, a->abort_flag))
            return NULL;
        for (uint64_t r = 1; r <= a->rounds; r++) {
            uint64_t t0 = now_ns();
            idx = chase(a->lines, idx, CHAIN_LINES);
            total += now_ns() - t0;
            rewrite_chain(a->lines, a->next_of);
            atomic_store_explicit(a->seq_a, r, memory_order_release);
            if (r < a->rounds && wait_seq(a->seq_b, r, a->abort_flag))
                return NULL;
        }
    } else {
        rewrite_chain(a->lines, a->next_of); /* initial ownership */
        atomic_store_explicit(a->seq_b, 0, memory_order_release);
        for (uint64_t r = 1; r <= a->rounds; r++) {
            if (wait_seq(a->seq_a, r, a->abort_flag))
                return NULL;
            uint64_t t0 = now_ns();
            idx = chase(a->lines, idx, CHAIN_LINES);
            total += now_ns() - t0;
            rewrite_chain(a->lines, a->next_of);
            atomic_store_explicit(a->seq_b, r, memory_order_release);
        }
    }
    chase_sink = idx;
    a->total_ns = total;
    return NULL;
}

static PyObject *py_load_remote_cost(PyObject *self, PyObject *args) {
    (void)self;
    int core_a, core_b;
    unsigned long long rounds;
    if (!PyArg_ParseTuple(args, "iiK", &core_a, &core_b, &rounds))
        return NULL;
    if (rounds < 1) {
        PyErr_SetString(PyExc_ValueError, "rounds must be >= 1");
        return NULL;
    }
    if (core_a == core_b) {
        PyErr_SetString(PyExc_ValueError, "remote-read cost needs two distinct cores");
        return NULL;
    }
    padded_u64_t *lines = (padded_u64_t *)aligned_alloc(
        CACHELINE, sizeof(padded_u64_t) * CHAIN_LINES);
    if (!lines)
        return PyErr_NoMemory();
    uint64_t next_of[CHAIN_LINES];
    build_chain(next_of);

    _Atomic uint64_t seq_a = UINT64_MAX - 1, seq_b = UINT64_MAX - 1;
    _Atomic int abort_flag = 0;
    /* seq_b starts at a sentinel: worker B publishes 0 once it owns the chain */
    atomic_store(&seq_a, 0);
    atomic_store(&seq_b, UINT64_MAX - 1);

    pingpong_arg_t pa = {lines, next_of, rounds, core_a, 1, 0, 0, &seq_a, &seq_b, &abort_flag};
    pingpong_arg_t pb = {lines, next_of, rounds, core_b, 0, 0, 0, &seq_a, &seq_b, &abort_flag};

    int spawn_err = 0;
    pthread_t ta = 0, tb = 0;
    Py_BEGIN_ALLOW_THREADS;
    if (pthread_create(&tb, NULL, pingpong_worker, &pb))
        spawn_err = errno ? errno : EAGAIN;
    else {
        if (pthread_create(&ta, NULL, pingpong_worker, &pa)) {
            spawn_err = errno ? errno : EAGAIN;
            atomic_store(&abort_flag, 1);
            atomic_store(&seq_a, UINT64_MAX);
        }
        if (ta)
            pthread_join(ta, NULL);
        pthread_join(tb, NULL);
    }
    Py_END_ALLOW_THREADS;

    PyObject *out = NULL;
    if (spawn_err)
        PyErr_Format(PyExc_OSError, "pthread_create failed: %s", strerror(spawn_err));
    else if (pa.pin_err || pb.pin_err)
        PyErr_Format(PyExc_OSError, "failed to pin to core %d: %s",
                     pa.pin_err ? core_a : core_b,
                     strerror(pa.pin_err ? pa.pin_err : pb.pin_err));
    else {
        double loads = (double)(2 * rounds * CHAIN_LINES);
        out = PyFloat_FromDouble((double)(pa.total_ns + pb.total_ns) / loads);
    }
    free(lines);
    return out;
}

/* ------------------------------------------------------------- MCS bench */

typedef struct qnode {
    _Atomic(struct qnode *) next;
    _Atomic int locked;
    char pad[CACHELINE - sizeof(void *) - sizeof(int)];
} qnode_t;

typedef struct {
    int core;
    int id; /* 1-based: 0 means "no owner" in the violation detector */
    uint64_t c_work;
    uint64_t p_work;
    uint64_t ops;
    uint64_t violations;
    int pin_err;
    qnode_t *node;
    _Atomic(qnode_t *) *tail;
    _Atomic int *cs_owner;
    _Atomic int *start;
    _Atomic int *stop;
    _Atomic int *ready;
    char pad[CACHELINE];
} mcs_arg_t;

static void *mcs_worker(void *vp) {
    mcs_arg_t *a = (mcs_arg_t *)vp;
    a->pin_err = pin_to_core(a->core);
    atomic_fetch_add(a->ready, 1);
    if (a->pin_err) {
        atomic_store(a->stop, 1);
        return NULL;
    }
    while (!atomic_load_explicit(a->start, memory_order_acquire)) {
        if (atomic_load(a->stop))
            return NULL;
        cpu_relax();
    }
    qnode_t *node = a->node;
    uint64_t ops = 0, viol = 0;
    while (!atomic_load_explicit(a->stop, memory_order_relaxed)) {
        atomic_store_explicit(&node->next, NULL, memory_order_relaxed);
        atomic_store_explicit(&node->locked, 1, memory_order_relaxed);
        qnode_t *pred = atomic_exchange_explicit(a->tail, node, memory_order_acq_rel);
        if (pred) {
            atomic_store_explicit(&pred->next, node, memory_order_release);
            while (atomic_load_explicit(&node->locked, memory_order_acquire))
                cpu_relax();
        }
        /* critical section, with the overlap detector around it */
        if (atomic_load_explicit(a->cs_owner, memory_order_relaxed) != 0)
            viol++;
        atomic_store_explicit(a->cs_owner, a->id, memory_order_relaxed);
        spin_work(a->c_work);
        if (atomic_load_explicit(a->cs_owner, memory_order_relaxed) != a->id)
            viol++;
        atomic_store_explicit(a->cs_owner, 0, memory_order_relaxed);

        qnode_t *succ = atomic_load_explicit(&node->next, memory_order_acquire);
        if (!succ) {
            qnode_t *expected = node;
            if (atomic_compare_exchange_strong_explicit(
                    a->tail, &expected, NULL, memory_order_acq_rel,
                    memory_order_acquire))
                goto parallel;
            while (!(succ = atomic_load_explicit(&node->next, memory_order_acquire)))
                cpu_relax();
        }
        atomic_store_explicit(&succ->locked, 0, memory_order_release);
    parallel:
        spin_work(a->p_work);
        ops++;
    }
    a->ops = ops;
    a->violations = viol;
    return NULL;
}

static PyObject *py_mcs_bench(PyObject *self, PyObject *args) {
    (void)self;
    PyObject *cores_obj;
    unsigned long long c_work, p_work;
    double duration_s;
    if (!PyArg_ParseTuple(args, "OKKd", &cores_obj, &c_work, &p_work, &duration_s))
        return NULL;
    if (duration_s <= 0) {
        PyErr_SetString(PyExc_ValueError, "duration must be positive");
        return NULL;
    }
    int *cores;
    Py_ssize_t n;
    if (parse_cores(cores_obj, &cores, &n))
        return NULL;

    qnode_t *nodes = (qnode_t *)aligned_alloc(CACHELINE, sizeof(qnode_t) * (size_t)n);
    mcs_arg_t *ma = (mcs_arg_t *)calloc((size_t)n, sizeof(mcs_arg_t));
    pthread_t *tids = (pthread_t *)calloc((size_t)n, sizeof(pthread_t));
    if (!nodes || !ma || !tids) {
        free(nodes);
        free(ma);
        free(tids);
        free(cores);
        return PyErr_NoMemory();
    }
    memset(nodes, 0, sizeof(qnode_t) * (size_t)n);

    _Atomic(qnode_t *) tail = NULL;
    _Atomic int cs_owner = 0, start = 0, stop = 0, ready = 0;
    double elapsed_s = 0.0;
    int spawn_err = 0, pin_err = 0;
    Py_ssize_t spawned = 0;

    Py_BEGIN_ALLOW_THREADS;
    for (Py_ssize_t i = 0; i < n; i++) {
        ma[i].core = cores[i];
        ma[i].id = (int)i + 1;
        ma[i].c_work = c_work;
        ma[i].p_work = p_work;
        ma[i].node = &nodes[i];
        ma[i].tail = &tail;
        ma[i].cs_owner = &cs_owner;
        ma[i].start = &start;
        ma[i].stop = &stop;
        ma[i].ready = &ready;
        if (pthread_create(&tids[i], NULL, mcs_worker, &ma[i])) {
            spawn_err = errno ? errno : EAGAIN;
            atomic_store(&stop, 1);
            break;
        }
        spawned++;
    }
    if (!spawn_err) {
        while (atomic_load(&ready) < (int)n)
            cpu_relax();
        if (!atomic_load(&stop)) {
            uint64_t t0 = now_ns();
            atomic_store_explicit(&start, 1, memory_order_release);
            sleep_until_ns(t0 + (uint64_t)(duration_s * 1e9));
            atomic_store_explicit(&stop, 1, memory_order_release);
            elapsed_s = (double)(now_ns() - t0) / 1e9;
        }
    }
    for (Py_ssize_t i = 0; i < spawned; i++)
        pthread_join(tids[i], NULL);
    for (Py_ssize_t i = 0; i < spawned; i++)
        if (ma[i].pin_err) {
            pin_err = ma[i].pin_err;
            break;
        }
    Py_END_ALLOW_THREADS;

    PyObject *out = NULL;
    if (spawn_err)
        PyErr_Format(PyExc_OSError, "pthread_create failed: %s", strerror(spawn_err));
    else if (pin_err)
        PyErr_Format(PyExc_OSError, "failed to pin a worker thread: %s",
                     strerror(pin_err));
    else {
        uint64_t viol = 0;
        uint64_t *ops = (uint64_t *)malloc(sizeof(uint64_t) * (size_t)n);
        if (ops) {
            for (Py_ssize_t i = 0; i < n; i++) {
                ops[i] = ma[i].ops;
                viol += ma[i].violations;
            }
            PyObject *base = ops_result(elapsed_s, ops, n);
            free(ops);
            if (base) {
                out = Py_BuildValue("(OOK)", PyTuple_GET_ITEM(base, 0),
                                    PyTuple_GET_ITEM(base, 1),
                                    (unsigned long long)viol);
                Py_DECREF(base);
            }
        } else
            PyErr_NoMemory();
    }
    free(nodes);
    free(ma);
    free(tids);
    free(cores);
    return out;
}

/* ------------------------------------------------------------ module def */

static PyMethodDef methods[] = {
    {"timer_resolution_ns", py_timer_resolution_ns, METH_NOARGS,
     "CLOCK_MONOTONIC resolution in nanoseconds."},
    {"work_streams", py_work_streams, METH_VARARGS,
     "work_streams(cores, work_per_op, duration_s) -> (elapsed_s, [ops...])"},
    {"store_rmw_cost", py_store_rmw_cost, METH_VARARGS,
     "store_rmw_cost(core, rounds) -> ns per uncontended atomic exchange"},
    {"load_hit_cost", py_load_hit_cost, METH_VARARGS,
     "load_hit_cost(core, rounds) -> ns per dependent load from own cache"},
    {"load_remote_cost", py_load_remote_cost, METH_VARARGS,
     "load_remote_cost(core_a, core_b, rounds) -> ns per load of a remote-owned line"},
    {"mcs_bench", py_mcs_bench, METH_VARARGS,
     "mcs_bench(cores, c_work, p_work, duration_s) -> (elapsed_s, [ops...], violations)"},
    {NULL, NULL, 0, NULL},
};

static struct PyModuleDef moduledef = {
    PyModuleDef_HEAD_INIT, "_native",
    "Pinned-thread measurement kernels for calibration and benchmarking.",
    -1, methods, NULL, NULL, NULL, NULL,
};

PyMODINIT_FUNC PyInit__native(void) { return PyModule_Create(&moduledef); }
