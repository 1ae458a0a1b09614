package org.redisson;

import org.redisson.command.CommandAsyncExecutor;

public abstract class RedissonExpirable extends RedissonObject {

    protected RedissonExpirable(CommandAsyncExecutor commandExecutor, String name) {
        super(commandExecutor, name);
    }

    public boolean isExists() {
        return true;
    }
}
