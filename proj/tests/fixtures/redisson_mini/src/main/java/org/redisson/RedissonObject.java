package org.redisson;

import org.redisson.command.CommandAsyncExecutor;

public abstract class RedissonObject {

    protected final CommandAsyncExecutor commandExecutor;
    private final String name;

    protected RedissonObject(CommandAsyncExecutor commandExecutor, String name) {
        this.commandExecutor = commandExecutor;
        this.name = name;
    }

    public String getName() {
        return name;
    }

    protected ServiceManager getServiceManager() {
        return ServiceManager.instance();
    }
}
