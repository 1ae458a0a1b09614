package org.redisson;

import org.redisson.command.CommandAsyncExecutor;

public class RedissonAtomicDouble extends RedissonExpirable {

    private double value;

    public RedissonAtomicDouble(CommandAsyncExecutor commandExecutor, String name) {
        super(commandExecutor, name);
    }

    public double getAndSet(double newValue) {
        double old = value;
        value = newValue;
        return old;
    }

    public double getAndDelete() {
        double old = value;
        value = 0;
        return old;
    }

    public void set(double newValue) {
        value = newValue;
    }
}
