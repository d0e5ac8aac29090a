/* Support layer for C emitted by the cbc compiler. */
#ifndef CBC_RT_H
#define CBC_RT_H

#include <setjmp.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

typedef uint64_t cbc_word;

/* A code segment routine. Trampoline routines return the next table index;
   direct routines return whatever the final segment returns. */
typedef int cbc_seg_fn(void);

#ifdef CBC_DIRECT
typedef cbc_seg_fn *cbc_segptr;
#define CBC_RETURN_SEG (&cbc_rt_return_seg)
#define CBC_OVERFLOW_SEG (&cbc_rt_overflow_seg)
#else
typedef intptr_t cbc_segptr;
#define CBC_RETURN_SEG ((cbc_segptr)1)
#define CBC_OVERFLOW_SEG ((cbc_segptr)2)
#endif

/* The shared argument frame, defined by the emitted unit. */
extern cbc_word cbc_frame[];

#define CBC_SLOT(T, w) (*(T *)(void *)&cbc_frame[w])
#define CBC_TEMP(T, t) (*(T *)(void *)(t))

/* Tail position call in the direct backend. Define CBC_MUSTTAIL with a
   compiler that supports the musttail attribute to have it enforced. */
#if defined(CBC_MUSTTAIL) && defined(__clang__)
#define CBC_TAILCALL(call) __attribute__((musttail)) return call
#else
#define CBC_TAILCALL(call) return call
#endif

/* Native stack probe, compiled in with -DCBC_PROBE. */
#ifdef CBC_PROBE
#define CBC_PROBE_BASE() do { char cbc_probe_; cbc_rt_probe_base(&cbc_probe_); } while (0)
#define CBC_PROBE_POINT() do { char cbc_probe_; cbc_rt_probe(&cbc_probe_); } while (0)
#else
#define CBC_PROBE_BASE() ((void)0)
#define CBC_PROBE_POINT() ((void)0)
#endif

typedef struct cbc_env {
    jmp_buf jb;
    int status;
    int live;
} cbc_env;

/* Environment handed over by the latest goto-with-environment. */
extern cbc_env *cbc_rt_pending_env;

cbc_env *cbc_rt_capture_begin(void);
int cbc_rt_capture_end(cbc_env *env, int status);
void cbc_rt_resume(cbc_env *env, int status);

int cbc_rt_drive(cbc_seg_fn *const *table, int n, int id);
int cbc_rt_halt_status(void);
int cbc_rt_return_seg(void);
int cbc_rt_overflow_seg(void);
void cbc_rt_trap(const char *msg);

/* Explicit CbC stack. */
extern char *cbc_stack_limit;
char *cbc_stack_top(void);
size_t cbc_rt_stack_highwater(void);

size_t cbc_rt_native_highwater(void);
void cbc_rt_probe_base(char *at);
void cbc_rt_probe(char *at);

/* Identity, kept out of line so callers cannot fold it. */
int cbc_opaque(int v);

#endif
