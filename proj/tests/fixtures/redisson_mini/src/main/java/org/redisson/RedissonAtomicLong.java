package org.redisson;

import org.redisson.command.CommandAsyncExecutor;

public class RedissonAtomicLong extends RedissonExpirable {

    private long value;

    public RedissonAtomicLong(CommandAsyncExecutor commandExecutor, String name) {
        super(commandExecutor, name);
    }

    public long getAndSet(long newValue) {
        long old = value;
        value = newValue;
        return old;
    }

    public long getAndDelete() {
        long old = value;
        value = 0;
        return old;
    }

    public void set(long newValue) {
        value = newValue;
    }

    public long incrementAndGet() {
        value++;
        return value;
    }
}
