#include "cbc_rt.h"

#define CBC_TRAP_STATUS 70
#define CBC_STACK_DEFAULT (64 * 1024)
#define CBC_STACK_FILL 0xA5

cbc_env *cbc_rt_pending_env;
char *cbc_stack_limit;

static char *stack_base;
static size_t stack_size;
static char *probe_base;
static char *probe_low;
static int report_registered;

void cbc_rt_trap(const char *msg)
{
    fflush(stdout);
    fprintf(stderr, "cbc: %s\n", msg);
    exit(CBC_TRAP_STATUS);
}

static void report(void)
{
    fflush(stdout);
    fprintf(stderr, "cbc-highwater=%lu cbc-native-highwater=%lu\n",
            (unsigned long)cbc_rt_stack_highwater(), (unsigned long)cbc_rt_native_highwater());
}

static void register_report(void)
{
    if (!report_registered) {
        report_registered = 1;
        if (getenv("CBC_HIGHWATER"))
            atexit(report);
    }
}

cbc_env *cbc_rt_capture_begin(void)
{
    cbc_env *env = malloc(sizeof *env);
    if (!env)
        cbc_rt_trap("out of memory");
    env->status = 0;
    env->live = 1;
    register_report();
    return env;
}

int cbc_rt_capture_end(cbc_env *env, int status)
{
    env->live = 0;
    return status;
}

void cbc_rt_resume(cbc_env *env, int status)
{
    if (!env || !env->live)
        cbc_rt_trap("dead environment");
    env->live = 0;
    env->status = status;
    longjmp(env->jb, 1);
}

int cbc_rt_halt_status(void)
{
    return *(int *)(void *)&cbc_frame[0];
}

int cbc_rt_drive(cbc_seg_fn *const *table, int n, int id)
{
    register_report();
    for (;;) {
        if (id == 0)
            return cbc_rt_halt_status();
        if (id < 0 || id >= n || !table[id])
            cbc_rt_trap("bad segment id");
        id = table[id]();
    }
}

int cbc_rt_return_seg(void)
{
    cbc_env *env = cbc_rt_pending_env;
    cbc_rt_pending_env = 0;
    cbc_rt_resume(env, cbc_rt_halt_status());
    return 0;
}

int cbc_rt_overflow_seg(void)
{
    cbc_rt_trap("stack overflow");
    return 0;
}

static void stack_init(void)
{
    const char *s = getenv("CBC_STACK_SIZE");
    stack_size = s ? strtoul(s, 0, 0) : CBC_STACK_DEFAULT;
    if (stack_size < 64)
        stack_size = CBC_STACK_DEFAULT;
    stack_base = malloc(stack_size);
    if (!stack_base)
        cbc_rt_trap("out of memory");
    memset(stack_base, CBC_STACK_FILL, stack_size);
    cbc_stack_limit = stack_base;
    register_report();
}

char *cbc_stack_top(void)
{
    if (!stack_base)
        stack_init();
    return stack_base + stack_size;
}

size_t cbc_rt_stack_highwater(void)
{
    size_t i;
    if (!stack_base)
        return 0;
    for (i = 0; i < stack_size; i++)
        if ((unsigned char)stack_base[i] != CBC_STACK_FILL)
            return stack_size - i;
    return 0;
}

size_t cbc_rt_native_highwater(void)
{
    if (!probe_base || !probe_low || probe_low > probe_base)
        return 0;
    return (size_t)(probe_base - probe_low);
}

void cbc_rt_probe_base(char *at)
{
    if (!probe_base || at > probe_base)
        probe_base = at;
    register_report();
}

void cbc_rt_probe(char *at)
{
    if (!probe_low || at < probe_low)
        probe_low = at;
}

int cbc_opaque(int v)
{
    return v;
}
